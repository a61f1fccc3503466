#include "csichart/runner.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "binary_io.hpp"
#include "csichart/config.hpp"
#include "csichart/errors.hpp"

namespace csichart {

namespace fs = std::filesystem;

namespace {

// Independent seed streams derived from the experiment seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum SeedStream : std::uint64_t { train_positions = 1, test_positions, anchors, noise, model_init };

constexpr std::string_view embedding_magic{"CSIEMB\0\0", 8};
constexpr std::uint64_t embedding_version = 1;

template <typename Enum>
Enum parse_enum(const nlohmann::json &j, const char *key, Enum fallback, Enum (*parse)(const std::string &))
{
    if (auto it = j.find(key); it != j.end())
        return parse(it->get<std::string>());
    return fallback;
}

Dataset features_for(const ExperimentConfig &cfg,
                     const Scene &scene,
                     const std::vector<Position> &positions,
                     const std::vector<std::int64_t> &trace_ids,
                     Rng &noise_rng)
{
    Dataset d;
    d.scene = cfg.scene;
    d.pipeline_version = cfg.pipeline.version_tag();
    d.has_positions = true;
    const auto n = static_cast<Eigen::Index>(positions.size());
    const auto dim = static_cast<Eigen::Index>(cfg.scene.num_antennas) * cfg.scene.num_subcarriers;
    d.features.resize(dim, n);
    d.positions.resize(2, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto &p = positions[static_cast<std::size_t>(i)];
        d.features.col(i) = csi_to_features(synth_csi(scene, p, noise_rng), cfg.pipeline.sigma);
        d.positions.col(i) = p;
    }
    d.anchored.assign(positions.size(), 0);
    d.trace_id = trace_ids;
    return d;
}

void flatten_traces(const std::vector<Trace> &traces, std::vector<Position> &pos, std::vector<std::int64_t> &ids)
{
    for (std::size_t t = 0; t < traces.size(); ++t)
        for (const auto &s : traces[t].samples) {
            pos.push_back(s.position);
            ids.push_back(static_cast<std::int64_t>(t));
        }
}

void ensure_dir(const fs::path &dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create output directory " + dir.string());
}

void check_pipeline(const ExperimentConfig &cfg, const Dataset &data, const fs::path &path)
{
    if (data.pipeline_version != cfg.pipeline.version_tag())
        throw StaleDataset(path.string() + " was written by feature pipeline '" + data.pipeline_version +
                           "', expected '" + cfg.pipeline.version_tag() + "'");
}

std::string read_magic(const fs::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string m(8, '\0');
    in.read(m.data(), 8);
    return m;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

} // namespace

std::string to_string(Method m)
{
    switch (m) {
    case Method::siamese:
        return "siamese";
    case Method::fcnn:
        return "fcnn";
    case Method::sammon:
        return "sammon";
    }
    return "unknown";
}

std::string to_string(SceneMode m) { return m == SceneMode::uniform ? "uniform" : "t_intersection"; }

Method parse_method(const std::string &s)
{
    if (s == "siamese")
        return Method::siamese;
    if (s == "fcnn")
        return Method::fcnn;
    if (s == "sammon")
        return Method::sammon;
    throw InvalidConfig("unknown method: " + s);
}

SceneMode parse_scene_mode(const std::string &s)
{
    if (s == "uniform")
        return SceneMode::uniform;
    if (s == "t_intersection" || s == "t-intersection")
        return SceneMode::t_intersection;
    throw InvalidConfig("unknown scene mode: " + s);
}

void ExperimentConfig::validate() const
{
    scene.validate();
    sgd.validate();
    loss.validate();
    if (!std::isfinite(pipeline.sigma))
        throw InvalidConfig("feature sigma must be finite");
    if (loss.regime != regime)
        throw InvalidConfig("loss regime does not match experiment regime");
    if (method == Method::sammon && regime != Regime::unsupervised)
        throw InvalidConfig("Sammon's mapping is unsupervised only");
    if (method == Method::fcnn && regime != Regime::supervised)
        throw InvalidConfig("the FCNN baseline is supervised only");
    if (!(anchor_fraction >= 0.0 && anchor_fraction <= 1.0))
        throw InvalidConfig("anchor_fraction must lie in [0, 1]");
    if (regime == Regime::semisupervised && !(anchor_fraction > 0.0 && anchor_fraction < 1.0))
        throw InvalidConfig("semisupervised regime needs anchor_fraction in (0, 1)");
    if (regime == Regime::supervised && !(anchor_fraction > 0.0))
        throw InvalidConfig("supervised regime needs anchored samples");
    if (scene_mode == SceneMode::uniform) {
        if (num_train < 2)
            throw InvalidConfig("num_train must be at least 2");
        if (num_test - num_test / 2 < 4 || num_test / 2 < 1)
            throw InvalidConfig("num_test must be at least 8 (half uniform, half square ring)");
    } else if (traces.train_traces < 1 || traces.test_traces < 1) {
        throw InvalidConfig("trace counts must be positive");
    }
    for (int h : hidden_layers)
        if (h <= 0)
            throw InvalidConfig("hidden layer widths must be positive");
    for (int k : k_values)
        if (k < 1)
            throw InvalidConfig("k_values must be positive");
    if (!(suite_siamese_pairwise_weight >= 0.0))
        throw InvalidConfig("suite_siamese_pairwise_weight must be nonnegative");
}

std::vector<int> ExperimentConfig::layer_dims() const
{
    std::vector<int> dims;
    dims.push_back(scene.num_antennas * scene.num_subcarriers);
    dims.insert(dims.end(), hidden_layers.begin(), hidden_layers.end());
    dims.push_back(2);
    return dims;
}

SgdConfig default_sgd(Regime regime)
{
    SgdConfig s;
    s.momentum = 0.9;
    s.l2_lambda = 10.0;
    switch (regime) {
    case Regime::supervised:
        s.learning_rate = 3e-6;
        s.batch_size = 32;
        s.epochs = 200;
        break;
    case Regime::semisupervised:
        s.learning_rate = 1e-6;
        s.batch_size = 32;
        s.epochs = 200;
        break;
    case Regime::unsupervised:
        s.learning_rate = 3e-5;
        s.batch_size = 500;
        s.epochs = 600;
        break;
    }
    return s;
}

ExperimentConfig default_config(Regime regime, Method method)
{
    ExperimentConfig c;
    c.regime = regime;
    c.method = method;
    c.loss = LossConfig::for_regime(regime);
    c.sgd = default_sgd(regime);
    c.anchor_fraction = regime == Regime::semisupervised ? 0.1 : 1.0;
    return c;
}

nlohmann::json to_json(const ExperimentConfig &cfg)
{
    nlohmann::json j;
    j["scene"] = cfg.scene;
    j["pipeline"] = cfg.pipeline;
    j["scene_mode"] = to_string(cfg.scene_mode);
    j["num_train"] = cfg.num_train;
    j["num_test"] = cfg.num_test;
    j["traces"] = {{"train_traces", cfg.traces.train_traces},
                   {"test_traces", cfg.traces.test_traces},
                   {"speed", cfg.traces.speed},
                   {"dt", cfg.traces.dt},
                   {"lateral_jitter", cfg.traces.options.lateral_jitter},
                   {"turn_radius", cfg.traces.options.turn_radius}};
    j["regime"] = to_string(cfg.regime);
    j["anchor_fraction"] = cfg.anchor_fraction;
    j["method"] = to_string(cfg.method);
    j["loss"] = {{"epsilon", cfg.loss.epsilon},
                 {"anchor_weight", cfg.loss.anchor_weight},
                 {"pairwise_weight", cfg.loss.pairwise_weight}};
    j["sgd"] = cfg.sgd;
    j["hidden_layers"] = cfg.hidden_layers;
    j["sammon"] = {{"iterations", cfg.sammon.iterations},
                   {"learning_rate", cfg.sammon.learning_rate},
                   {"momentum", cfg.sammon.momentum},
                   {"epsilon", cfg.sammon.epsilon},
                   {"seed", cfg.sammon.seed}};
    j["k_values"] = cfg.k_values;
    j["suite_siamese_pairwise_weight"] = cfg.suite_siamese_pairwise_weight;
    j["suite_regime_sgd"] = cfg.suite_regime_sgd;
    j["output_dir"] = cfg.output_dir.string();
    j["seed"] = cfg.seed;
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json &j)
{
    try {
        const Regime regime = parse_enum(j, "regime", Regime::supervised, &parse_regime);
        const Method method = parse_enum(j, "method", Method::siamese, &parse_method);
        ExperimentConfig c = default_config(regime, method);
        if (auto it = j.find("scene"); it != j.end())
            from_json(*it, c.scene);
        if (auto it = j.find("pipeline"); it != j.end())
            from_json(*it, c.pipeline);
        c.scene_mode = parse_enum(j, "scene_mode", c.scene_mode, &parse_scene_mode);
        c.num_train = j.value("num_train", c.num_train);
        c.num_test = j.value("num_test", c.num_test);
        if (auto it = j.find("traces"); it != j.end()) {
            c.traces.train_traces = it->value("train_traces", c.traces.train_traces);
            c.traces.test_traces = it->value("test_traces", c.traces.test_traces);
            c.traces.speed = it->value("speed", c.traces.speed);
            c.traces.dt = it->value("dt", c.traces.dt);
            c.traces.options.lateral_jitter = it->value("lateral_jitter", c.traces.options.lateral_jitter);
            c.traces.options.turn_radius = it->value("turn_radius", c.traces.options.turn_radius);
        }
        c.anchor_fraction = j.value("anchor_fraction", c.anchor_fraction);
        if (auto it = j.find("loss"); it != j.end()) {
            c.loss.epsilon = it->value("epsilon", c.loss.epsilon);
            c.loss.anchor_weight = it->value("anchor_weight", c.loss.anchor_weight);
            c.loss.pairwise_weight = it->value("pairwise_weight", c.loss.pairwise_weight);
        }
        if (auto it = j.find("sgd"); it != j.end())
            from_json(*it, c.sgd);
        c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
        if (auto it = j.find("sammon"); it != j.end()) {
            c.sammon.iterations = it->value("iterations", c.sammon.iterations);
            c.sammon.learning_rate = it->value("learning_rate", c.sammon.learning_rate);
            c.sammon.momentum = it->value("momentum", c.sammon.momentum);
            c.sammon.epsilon = it->value("epsilon", c.sammon.epsilon);
            c.sammon.seed = it->value("seed", c.sammon.seed);
        }
        c.k_values = j.value("k_values", c.k_values);
        c.suite_siamese_pairwise_weight = j.value("suite_siamese_pairwise_weight", c.suite_siamese_pairwise_weight);
        c.suite_regime_sgd = j.value("suite_regime_sgd", c.suite_regime_sgd);
        c.output_dir = j.value("output_dir", c.output_dir.string());
        c.seed = j.value("seed", c.seed);
        return c;
    } catch (const nlohmann::json::exception &e) {
        throw InvalidConfig(std::string("malformed config: ") + e.what());
    }
}

ExperimentConfig load_config(const fs::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw InvalidConfig("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

void save_config(const fs::path &path, const ExperimentConfig &cfg)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write config " + path.string());
    out << to_json(cfg).dump(2) << '\n';
}

fs::path resolve_output_dir(const ExperimentConfig &cfg)
{
    if (const char *env = std::getenv("CSICHART_OUTPUT_DIR"); env && *env)
        return fs::path(env);
    return cfg.output_dir;
}

DatasetPair build_datasets(const ExperimentConfig &cfg)
{
    cfg.validate();
    const Scene scene = make_scene(cfg.scene);
    Rng noise_rng(derive_seed(cfg.seed, noise));

    std::vector<Position> train_pos, test_pos;
    std::vector<std::int64_t> train_ids, test_ids;
    if (cfg.scene_mode == SceneMode::uniform) {
        train_pos = place_uniform(cfg.scene, cfg.num_train, derive_seed(cfg.seed, train_positions));
        test_pos = place_uniform(cfg.scene, cfg.num_test / 2, derive_seed(cfg.seed, test_positions));
        const auto ring = place_square_ring(cfg.scene, cfg.num_test - cfg.num_test / 2);
        test_pos.insert(test_pos.end(), ring.begin(), ring.end());
        train_ids.assign(train_pos.size(), -1);
        test_ids.assign(test_pos.size(), -1);
    } else {
        const auto &tc = cfg.traces;
        flatten_traces(gen_t_intersection_traces(cfg.scene, tc.train_traces, tc.speed, tc.dt,
                                                 derive_seed(cfg.seed, train_positions), tc.options),
                       train_pos, train_ids);
        flatten_traces(gen_t_intersection_traces(cfg.scene, tc.test_traces, tc.speed, tc.dt,
                                                 derive_seed(cfg.seed, test_positions), tc.options),
                       test_pos, test_ids);
    }

    DatasetPair out;
    out.train = features_for(cfg, scene, train_pos, train_ids, noise_rng);
    out.test = features_for(cfg, scene, test_pos, test_ids, noise_rng);
    out.train.anchored = sample_anchor_mask(out.train.size(), cfg.anchor_fraction, derive_seed(cfg.seed, anchors));
    return out;
}

GenerateResult cmd_generate(const ExperimentConfig &cfg)
{
    GenerateResult r;
    r.data = build_datasets(cfg);
    const fs::path dir = resolve_output_dir(cfg);
    ensure_dir(dir);
    r.train_path = dir / "train.ds";
    r.test_path = dir / "test.ds";
    save_dataset(r.train_path, r.data.train);
    save_dataset(r.test_path, r.data.test);
    save_config(dir / "config.json", cfg);
    return r;
}

std::uint64_t dataset_fingerprint(const Dataset &data)
{
    // FNV-1a over the raw feature bytes and the sample count.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const unsigned char *p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::uint64_t n = data.size();
    mix(reinterpret_cast<const unsigned char *>(&n), sizeof n);
    mix(reinterpret_cast<const unsigned char *>(data.features.data()),
        static_cast<std::size_t>(data.features.size()) * sizeof(double));
    return h;
}

void save_embedding(const fs::path &path, const EmbeddingArtifact &e)
{
    detail::BinaryWriter w(path);
    w.magic(embedding_magic);
    w.u64(embedding_version);
    w.u64(e.dataset_fingerprint);
    w.u64(static_cast<std::uint64_t>(e.points.rows()));
    w.u64(static_cast<std::uint64_t>(e.points.cols()));
    w.f64s(e.points.data(), static_cast<std::size_t>(e.points.size()));
    w.finish();
}

EmbeddingArtifact load_embedding(const fs::path &path)
{
    detail::BinaryReader r(path);
    r.expect_magic(embedding_magic);
    if (r.u64() != embedding_version)
        throw IoError("unsupported embedding version in " + path.string());
    EmbeddingArtifact e;
    e.dataset_fingerprint = r.u64();
    const auto rows = static_cast<Eigen::Index>(r.u64());
    const auto cols = static_cast<Eigen::Index>(r.u64());
    if (rows <= 0 || rows > 64 || cols < 0 || cols > (1 << 26))
        throw IoError("corrupt embedding header in " + path.string());
    e.points.resize(rows, cols);
    r.f64s(e.points.data(), static_cast<std::size_t>(e.points.size()));
    r.expect_end();
    return e;
}

Dataset training_view(const ExperimentConfig &cfg, const Dataset &train)
{
    if (cfg.regime != Regime::supervised)
        return train;
    const auto idx = train.anchored_indices();
    if (idx.empty())
        throw InvalidConfig("supervised training set has no anchored samples");
    return train.subset(idx);
}

TrainOutcome train_method(const ExperimentConfig &cfg, const Dataset &train)
{
    cfg.validate();
    const Dataset view = training_view(cfg, train);
    TrainOutcome out;
    switch (cfg.method) {
    case Method::siamese: {
        auto model = init_model(cfg.layer_dims(), derive_seed(cfg.seed, model_init));
        auto res = csichart::train(std::move(model), view, cfg.loss, cfg.sgd);
        out.model = std::move(res.model);
        out.log = std::move(res.log);
        break;
    }
    case Method::fcnn: {
        auto model = init_model(cfg.layer_dims(), derive_seed(cfg.seed, model_init));
        auto res = train_fcnn(std::move(model), view, cfg.sgd);
        out.model = std::move(res.model);
        out.log = std::move(res.log);
        break;
    }
    case Method::sammon: {
        SammonOptions opts = cfg.sammon;
        opts.d_prime = 2;
        auto res = sammon_nonparametric(view.features, opts);
        out.embedding = EmbeddingArtifact{std::move(res.embedding.points), dataset_fingerprint(view)};
        for (std::size_t i = 0; i < res.best_loss_history.size(); ++i) {
            EpochRecord rec;
            rec.epoch = static_cast<int>(i);
            rec.pairwise_loss = res.best_loss_history[i];
            out.log.epochs.push_back(rec);
        }
        break;
    }
    }
    return out;
}

TrainArtifacts cmd_train(const ExperimentConfig &cfg, const fs::path &train_path)
{
    cfg.validate();
    const Dataset train = load_dataset(train_path);
    check_pipeline(cfg, train, train_path);
    const fs::path dir = resolve_output_dir(cfg);
    ensure_dir(dir);

    TrainArtifacts a;
    a.outcome = train_method(cfg, train);
    if (a.outcome.model) {
        a.artifact_path = dir / "model.ckpt";
        save_checkpoint(a.artifact_path, *a.outcome.model);
    } else {
        a.artifact_path = dir / "embedding.bin";
        save_embedding(a.artifact_path, *a.outcome.embedding);
        export_embedding_csv(dir / "embedding.csv", a.outcome.embedding->points);
    }
    a.log_path = dir / "train_log.csv";
    a.outcome.log.write_csv(a.log_path);
    save_config(dir / "config.json", cfg);
    return a;
}

namespace {

Eigen::MatrixXd outcome_points(const TrainOutcome &outcome, const Dataset &data)
{
    if (outcome.model)
        return predict(*outcome.model, data.features);
    if (!outcome.embedding)
        throw InvalidInput("nothing to evaluate: no model or embedding");
    if (outcome.embedding->dataset_fingerprint != dataset_fingerprint(data) ||
        static_cast<std::size_t>(outcome.embedding->points.cols()) != data.size())
        throw Unsupported("Sammon's mapping is nonparametric; results on a dataset other than its training set "
                          "are not available");
    return outcome.embedding->points;
}

} // namespace

MetricReport evaluate_outcome(const ExperimentConfig &cfg, const TrainOutcome &outcome, const Dataset &data)
{
    if (!data.has_positions)
        throw InvalidInput("evaluation dataset has no ground-truth positions");
    EvaluationOptions opts;
    opts.k_values = cfg.k_values;
    opts.include_mde = cfg.regime != Regime::unsupervised;
    return evaluate(outcome_points(outcome, data), data, opts);
}

EvaluateArtifacts cmd_evaluate(const ExperimentConfig &cfg,
                               const fs::path &artifact_path,
                               const fs::path &dataset_path,
                               const std::string &prefix)
{
    const Dataset data = load_dataset(dataset_path);
    check_pipeline(cfg, data, dataset_path);
    if (!data.has_positions)
        throw InvalidInput("evaluation dataset has no ground-truth positions");

    TrainOutcome outcome;
    const auto magic = read_magic(artifact_path);
    if (magic == std::string(embedding_magic))
        outcome.embedding = load_embedding(artifact_path);
    else
        outcome.model = load_checkpoint(artifact_path);

    const Eigen::MatrixXd points = outcome_points(outcome, data);
    EvaluationOptions opts;
    opts.k_values = cfg.k_values;
    opts.include_mde = cfg.regime != Regime::unsupervised;

    EvaluateArtifacts a;
    a.report = evaluate(points, data, opts);
    const fs::path dir = resolve_output_dir(cfg);
    ensure_dir(dir);
    a.report_csv = dir / (prefix + "report.csv");
    a.report_txt = dir / (prefix + "report.txt");
    a.scatter_csv = dir / (prefix + "scatter.csv");
    a.report.write(a.report_csv, a.report_txt);

    std::ofstream sc(a.scatter_csv);
    if (!sc)
        throw IoError("cannot write " + a.scatter_csv.string());
    sc << "true_x,true_y,pred_x,pred_y,trace_id\n" << std::setprecision(17);
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
        sc << data.positions(0, i) << ',' << data.positions(1, i) << ',' << points(0, i) << ',' << points(1, i) << ',';
        if (data.trace_id[static_cast<std::size_t>(i)] >= 0)
            sc << data.trace_id[static_cast<std::size_t>(i)];
        sc << '\n';
    }
    return a;
}

std::string SummaryTable::to_csv() const
{
    std::ostringstream os;
    os << "scene,regime,method,split,MDE,KS";
    for (int k : k_values)
        os << ",TW@" << k;
    for (int k : k_values)
        os << ",CT@" << k;
    os << '\n';
    for (const auto &r : rows) {
        os << r.scene << ',' << r.regime << ',' << r.method << ',' << r.split << ',';
        if (r.report.mde)
            os << fmt(*r.report.mde);
        os << ',' << fmt(r.report.ks);
        for (int k : k_values)
            os << ',' << fmt(r.report.tw.at(k));
        for (int k : k_values)
            os << ',' << fmt(r.report.ct.at(k));
        os << '\n';
    }
    return os.str();
}

std::string SummaryTable::to_text() const
{
    std::vector<std::string> header = {"scene", "regime", "method", "split", "MDE", "KS"};
    for (int k : k_values)
        header.push_back("TW@" + std::to_string(k));
    for (int k : k_values)
        header.push_back("CT@" + std::to_string(k));
    std::vector<std::vector<std::string>> cells;
    for (const auto &r : rows) {
        std::vector<std::string> row = {r.scene, r.regime, r.method, r.split,
                                        r.report.mde ? fmt(*r.report.mde) : "-", fmt(r.report.ks)};
        for (int k : k_values)
            row.push_back(fmt(r.report.tw.at(k)));
        for (int k : k_values)
            row.push_back(fmt(r.report.ct.at(k)));
        cells.push_back(std::move(row));
    }
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto &row : cells)
            width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream os;
    auto line = [&](const std::vector<std::string> &row) {
        for (std::size_t c = 0; c < row.size(); ++c)
            os << std::left << std::setw(static_cast<int>(width[c])) << row[c] << (c + 1 < row.size() ? "  " : "\n");
    };
    line(header);
    for (const auto &row : cells)
        line(row);
    return os.str();
}

namespace {

struct Cell
{
    Regime regime;
    Method method;
    double anchor_fraction;
    std::string regime_label;
    bool on_test;
};

ExperimentConfig cell_config(const ExperimentConfig &base, const Cell &cell)
{
    ExperimentConfig c = base;
    c.regime = cell.regime;
    c.method = cell.method;
    c.anchor_fraction = cell.anchor_fraction;
    const LossConfig defaults = LossConfig::for_regime(cell.regime);
    c.loss.regime = cell.regime;
    c.loss.anchor_weight = defaults.anchor_weight;
    c.loss.pairwise_weight = defaults.pairwise_weight;
    if (cell.method == Method::siamese && cell.regime == Regime::supervised)
        c.loss.pairwise_weight = base.suite_siamese_pairwise_weight;
    if (base.suite_regime_sgd) {
        c.sgd = default_sgd(cell.regime);
        c.sgd.seed = base.sgd.seed;
    }
    return c;
}

DatasetPair scene_data(const ExperimentConfig &scene_cfg)
{
    // Features and positions do not depend on the anchor fraction, so one
    // synthesis per scene serves every cell; only the anchor mask changes.
    ExperimentConfig gen_cfg = scene_cfg;
    gen_cfg.regime = Regime::supervised;
    gen_cfg.method = Method::siamese;
    gen_cfg.loss = LossConfig::for_regime(Regime::supervised);
    gen_cfg.anchor_fraction = 1.0;
    return build_datasets(gen_cfg);
}

SummaryRow run_cell(const ExperimentConfig &scene_cfg,
                    const std::string &scene_label,
                    const DatasetPair &data,
                    const Cell &cell)
{
    const ExperimentConfig cfg = cell_config(scene_cfg, cell);
    cfg.validate();
    Dataset train = data.train;
    train.anchored = sample_anchor_mask(train.size(), cell.anchor_fraction, derive_seed(cfg.seed, anchors));
    const TrainOutcome outcome = train_method(cfg, train);
    const Dataset &eval = cell.on_test ? data.test : train;
    return {scene_label, cell.regime_label, to_string(cell.method), cell.on_test ? "test" : "train",
            evaluate_outcome(cfg, outcome, eval)};
}

} // namespace

SummaryTable cmd_reproduce(const std::string &suite, const ExperimentConfig &base, bool parallel)
{
    SummaryTable table;
    table.k_values = base.k_values;
    std::vector<Cell> cells;
    SceneMode mode = SceneMode::uniform;
    if (suite == "full-grid") {
        cells = {
            {Regime::supervised, Method::fcnn, 1.0, "supervised", true},
            {Regime::supervised, Method::siamese, 1.0, "supervised", true},
            {Regime::semisupervised, Method::siamese, 0.1, "semisupervised", true},
            {Regime::unsupervised, Method::siamese, 0.0, "unsupervised", false},
            {Regime::unsupervised, Method::sammon, 0.0, "unsupervised", false},
        };
    } else if (suite == "label-ablation") {
        cells = {
            {Regime::supervised, Method::fcnn, 0.1, "supervised-10%", true},
            {Regime::supervised, Method::siamese, 0.1, "supervised-10%", true},
            {Regime::semisupervised, Method::siamese, 0.1, "semisupervised-10%", true},
        };
    } else if (suite == "t-intersection") {
        mode = SceneMode::t_intersection;
        cells = {{Regime::supervised, Method::siamese, 1.0, "supervised", true}};
    } else {
        throw InvalidConfig("unknown suite: " + suite);
    }
    struct Scene
    {
        ExperimentConfig cfg;
        std::string label;
        DatasetPair data;
    };
    std::vector<Scene> scenes;
    for (bool los : {true, false}) {
        ExperimentConfig c = base;
        c.scene_mode = mode;
        c.scene.los = los;
        scenes.push_back({c, los ? "LoS" : "NLoS", {}});
    }
    // Every cell reads shared data and writes its own slot, so the table is
    // the same whichever way the cells are scheduled.
    table.rows.resize(scenes.size() * cells.size());
    if (parallel) {
        std::vector<std::future<void>> jobs;
        for (auto &sc : scenes)
            jobs.push_back(std::async(std::launch::async, [&sc] { sc.data = scene_data(sc.cfg); }));
        for (auto &j : jobs)
            j.get();
        jobs.clear();
        for (std::size_t s = 0; s < scenes.size(); ++s)
            for (std::size_t c = 0; c < cells.size(); ++c)
                jobs.push_back(std::async(std::launch::async, [&, s, c] {
                    table.rows[s * cells.size() + c] = run_cell(scenes[s].cfg, scenes[s].label, scenes[s].data, cells[c]);
                }));
        for (auto &j : jobs)
            j.get();
    } else {
        for (std::size_t s = 0; s < scenes.size(); ++s) {
            scenes[s].data = scene_data(scenes[s].cfg);
            for (std::size_t c = 0; c < cells.size(); ++c)
                table.rows[s * cells.size() + c] = run_cell(scenes[s].cfg, scenes[s].label, scenes[s].data, cells[c]);
            scenes[s].data = {};
        }
    }

    const fs::path dir = resolve_output_dir(base);
    ensure_dir(dir);
    std::ofstream csv(dir / (suite + "_summary.csv"));
    std::ofstream txt(dir / (suite + "_summary.txt"));
    if (!csv || !txt)
        throw IoError("cannot write summary into " + dir.string());
    csv << table.to_csv();
    txt << table.to_text();
    return table;
}

} // namespace csichart
