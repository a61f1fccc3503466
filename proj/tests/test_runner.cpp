#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "csichart/errors.hpp"
#include "csichart/runner.hpp"

using namespace csichart;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string &name)
{
    const auto dir = fs::temp_directory_path() / ("csichart_runner_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ExperimentConfig small_config(Regime regime, Method method, const std::string &dir)
{
    auto c = default_config(regime, method);
    c.num_train = 60;
    c.num_test = 20;
    c.scene.num_scatterers = 40;
    c.hidden_layers = {16, 8};
    c.sgd.epochs = 3;
    c.sgd.batch_size = 20;
    c.sgd.learning_rate = 1e-6;
    c.sammon.iterations = 20;
    c.suite_regime_sgd = false;
    c.k_values = {1, 3};
    c.traces.train_traces = 2;
    c.traces.test_traces = 2;
    c.output_dir = fresh_dir(dir);
    return c;
}

std::size_t count_lines(const fs::path &p)
{
    std::ifstream in(p);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line))
        ++n;
    return n;
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

MlpModel identity_model()
{
    MlpModel m;
    DenseLayer l;
    l.weight = Eigen::MatrixXd::Identity(2, 2);
    l.bias = Eigen::VectorXd::Zero(2);
    l.activation = Activation::linear;
    m.layers.push_back(l);
    return m;
}

} // namespace

TEST_CASE("config validation")
{
    auto c = default_config(Regime::supervised, Method::sammon);
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c = default_config(Regime::unsupervised, Method::fcnn);
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c = default_config(Regime::semisupervised, Method::siamese);
    CHECK(c.anchor_fraction == 0.1);
    CHECK_NOTHROW(c.validate());
    c.anchor_fraction = 1.0;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c = default_config(Regime::unsupervised, Method::sammon);
    CHECK_NOTHROW(c.validate());
    for (auto r : {Regime::supervised, Regime::semisupervised, Regime::unsupervised}) {
        CHECK_NOTHROW(default_sgd(r).validate());
        CHECK(default_config(r, Method::siamese).sgd.learning_rate == default_sgd(r).learning_rate);
    }
    CHECK(ExperimentConfig{}.sgd.learning_rate == default_sgd(Regime::supervised).learning_rate);
    c.loss.regime = Regime::supervised;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    CHECK(default_config(Regime::supervised, Method::siamese).layer_dims() ==
          std::vector<int>{256, 512, 256, 128, 64, 32, 2});
}

TEST_CASE("config JSON round trip and defaults")
{
    auto c = default_config(Regime::semisupervised, Method::siamese);
    c.scene.los = false;
    c.scene.snr_db = 15.0;
    c.sgd.epochs = 7;
    c.k_values = {2, 5};
    c.seed = 99;
    const auto back = config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.scene == c.scene);

    const auto partial = config_from_json(nlohmann::json{{"regime", "unsupervised"}, {"method", "sammon"}});
    CHECK(partial.loss.anchor_weight == 0.0);
    CHECK(partial.num_train == 2000);
    CHECK(partial.sgd.batch_size == default_sgd(Regime::unsupervised).batch_size);
    CHECK(partial.sgd.learning_rate == default_sgd(Regime::unsupervised).learning_rate);
    CHECK(std::isinf(partial.scene.snr_db));
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"regime", "sometimes"}}), InvalidConfig);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"num_train", "many"}}), InvalidConfig);

    const auto dir = fresh_dir("cfg");
    save_config(dir / "c.json", c);
    CHECK(to_json(load_config(dir / "c.json")) == to_json(c));
    CHECK_THROWS_AS(load_config(dir / "missing.json"), IoError);
}

TEST_CASE("output directory override")
{
    auto c = default_config(Regime::supervised, Method::siamese);
    c.output_dir = "somewhere";
    ::unsetenv("CSICHART_OUTPUT_DIR");
    CHECK(resolve_output_dir(c) == fs::path("somewhere"));
    ::setenv("CSICHART_OUTPUT_DIR", "/tmp/elsewhere", 1);
    CHECK(resolve_output_dir(c) == fs::path("/tmp/elsewhere"));
    ::unsetenv("CSICHART_OUTPUT_DIR");
}

TEST_CASE("default datasets")
{
    const auto c = default_config(Regime::supervised, Method::siamese);
    const auto d = build_datasets(c);
    CHECK(d.train.size() == 2000);
    CHECK(d.test.size() == 400);
    CHECK(d.train.feature_dim() == 256);
    CHECK(d.test.feature_dim() == 256);
    CHECK(d.train.anchor_count() == 2000);
    CHECK(d.train.pipeline_version == c.pipeline.version_tag());
    for (Eigen::Index i = 0; i < 2000; ++i)
        CHECK(c.scene.area.contains(d.train.positions.col(i)));
    // Second half of the test set is the square ring.
    const auto ring = place_square_ring(c.scene, 200);
    for (Eigen::Index i = 0; i < 200; ++i)
        CHECK(d.test.positions.col(200 + i) == ring[static_cast<std::size_t>(i)]);
}

TEST_CASE("generate writes both splits")
{
    auto c = small_config(Regime::semisupervised, Method::siamese, "gen");
    const auto r = cmd_generate(c);
    CHECK(fs::exists(r.train_path));
    CHECK(fs::exists(r.test_path));
    CHECK(fs::exists(c.output_dir / "config.json"));
    const auto train = load_dataset(r.train_path);
    CHECK(train == r.data.train);
    CHECK(train.anchor_count() == 6);
    CHECK(load_dataset(r.test_path) == r.data.test);

    c.output_dir = "/proc/definitely/not/writable";
    CHECK_THROWS_AS(cmd_generate(c), IoError);
}

TEST_CASE("T-intersection datasets carry trace ids")
{
    auto c = small_config(Regime::supervised, Method::siamese, "tint");
    c.scene_mode = SceneMode::t_intersection;
    c.traces.train_traces = 20;
    c.traces.test_traces = 20;
    const auto d = build_datasets(c);
    for (const auto *set : {&d.train, &d.test}) {
        std::set<std::int64_t> ids(set->trace_id.begin(), set->trace_id.end());
        CHECK(ids.size() == 20);
        CHECK(*ids.begin() == 0);
        CHECK(*ids.rbegin() == 19);
    }
    CHECK(d.train.anchor_count() == d.train.size());
}

TEST_CASE("train dispatch")
{
    SUBCASE("unsupervised Siamese keeps alpha at one")
    {
        auto c = small_config(Regime::unsupervised, Method::siamese, "unsup");
        const auto g = cmd_generate(c);
        const auto a = cmd_train(c, g.train_path);
        const auto m = load_checkpoint(a.artifact_path);
        CHECK(m.alpha() == 1.0);
        CHECK(m.layer_dims() == c.layer_dims());
        CHECK(count_lines(a.log_path) == 1 + 3);
    }
    SUBCASE("Sammon writes an embedding that only evaluates on its own data")
    {
        auto c = small_config(Regime::unsupervised, Method::sammon, "sammon");
        const auto g = cmd_generate(c);
        const auto a = cmd_train(c, g.train_path);
        CHECK(a.artifact_path.filename() == "embedding.bin");
        CHECK(count_lines(c.output_dir / "embedding.csv") == 1 + 60);
        const auto e = load_embedding(a.artifact_path);
        CHECK(e.points.cols() == 60);
        CHECK_NOTHROW(cmd_evaluate(c, a.artifact_path, g.train_path));
        CHECK_THROWS_AS(cmd_evaluate(c, a.artifact_path, g.test_path), Unsupported);
    }
    SUBCASE("FCNN on ten percent uses only the anchored subset")
    {
        auto c = small_config(Regime::supervised, Method::fcnn, "fcnn10");
        c.anchor_fraction = 0.1;
        const auto g = cmd_generate(c);
        const auto view = training_view(c, g.data.train);
        CHECK(view.size() == 6);
        CHECK(view.anchor_count() == 6);
        CHECK_NOTHROW(cmd_train(c, g.train_path));
    }
    SUBCASE("stale pipeline")
    {
        auto c = small_config(Regime::unsupervised, Method::siamese, "stale");
        const auto g = cmd_generate(c);
        c.pipeline.sigma = 0.5;
        CHECK_THROWS_AS(cmd_train(c, g.train_path), StaleDataset);
    }
    SUBCASE("regime and method mismatch")
    {
        auto c = small_config(Regime::supervised, Method::sammon, "mismatch");
        CHECK_THROWS_AS(cmd_train(c, "unused.ds"), InvalidConfig);
    }
}

TEST_CASE("evaluate")
{
    auto c = small_config(Regime::supervised, Method::siamese, "eval");
    // Features equal to positions and an identity tower predict the truth.
    Dataset d;
    d.scene = c.scene;
    d.pipeline_version = c.pipeline.version_tag();
    d.positions = Eigen::MatrixXd::Random(2, 30) * 50.0;
    d.features = d.positions;
    d.has_positions = true;
    d.anchored.assign(30, 1);
    d.trace_id.assign(30, -1);
    d.trace_id[3] = 7;
    save_dataset(c.output_dir / "oracle.ds", d);
    save_checkpoint(c.output_dir / "oracle.ckpt", identity_model());

    SUBCASE("oracle checkpoint")
    {
        const auto r = cmd_evaluate(c, c.output_dir / "oracle.ckpt", c.output_dir / "oracle.ds");
        REQUIRE(r.report.mde.has_value());
        CHECK(*r.report.mde == 0.0);
        CHECK(r.report.ks < 1e-12);
        for (int k : c.k_values) {
            CHECK(r.report.tw.at(k) == 1.0);
            CHECK(r.report.ct.at(k) == 1.0);
        }
        CHECK(count_lines(r.scatter_csv) == 1 + 30);
        CHECK(fs::exists(r.report_txt));
        const auto text = slurp(r.scatter_csv);
        CHECK(text.rfind("true_x,true_y,pred_x,pred_y,trace_id\n", 0) == 0);
    }
    SUBCASE("unsupervised report has no MDE row")
    {
        auto u = c;
        u.regime = Regime::unsupervised;
        u.loss = LossConfig::for_regime(Regime::unsupervised);
        u.anchor_fraction = 0.0;
        const auto r = cmd_evaluate(u, c.output_dir / "oracle.ckpt", c.output_dir / "oracle.ds");
        CHECK_FALSE(r.report.mde.has_value());
        CHECK(slurp(r.report_csv).find("MDE") == std::string::npos);
    }
    SUBCASE("ground truth is required")
    {
        d.has_positions = false;
        d.positions.setZero();
        d.anchored.assign(30, 0);
        save_dataset(c.output_dir / "blind.ds", d);
        CHECK_THROWS_AS(cmd_evaluate(c, c.output_dir / "oracle.ckpt", c.output_dir / "blind.ds"), InvalidInput);
    }
    SUBCASE("scatter rows match the test set")
    {
        const auto g = cmd_generate(c);
        const auto a = cmd_train(c, g.train_path);
        const auto r = cmd_evaluate(c, a.artifact_path, g.test_path, "test_");
        CHECK(count_lines(r.scatter_csv) == 1 + g.data.test.size());
        CHECK(r.scatter_csv.filename() == "test_scatter.csv");
    }
}

TEST_CASE("embedding file round trip")
{
    const auto dir = fresh_dir("emb");
    EmbeddingArtifact e;
    e.points = Eigen::MatrixXd::Random(2, 17);
    e.dataset_fingerprint = 0x1234abcdULL;
    save_embedding(dir / "e.bin", e);
    const auto back = load_embedding(dir / "e.bin");
    CHECK(back.points == e.points);
    CHECK(back.dataset_fingerprint == e.dataset_fingerprint);
    fs::resize_file(dir / "e.bin", fs::file_size(dir / "e.bin") - 3);
    CHECK_THROWS_AS(load_embedding(dir / "e.bin"), IoError);
}

TEST_CASE("reproduce suites")
{
    auto c = small_config(Regime::supervised, Method::siamese, "suite");
    c.sgd.epochs = 1;
    c.sammon.iterations = 5;

    SUBCASE("full grid has one row per valid combination")
    {
        const auto t = cmd_reproduce("full-grid", c);
        CHECK(t.rows.size() == 10);
        std::set<std::string> keys;
        for (const auto &r : t.rows) {
            keys.insert(r.scene + "/" + r.regime + "/" + r.method);
            CHECK(r.report.mde.has_value() == (r.regime != "unsupervised"));
        }
        CHECK(keys.size() == 10);
        CHECK(keys.count("NLoS/unsupervised/sammon") == 1);
        CHECK(fs::exists(c.output_dir / "full-grid_summary.csv"));
        CHECK(count_lines(c.output_dir / "full-grid_summary.csv") == 11);
    }
    SUBCASE("t-intersection rows")
    {
        const auto t = cmd_reproduce("t-intersection", c);
        REQUIRE(t.rows.size() == 2);
        for (const auto &r : t.rows) {
            CHECK(r.split == "test");
            CHECK(r.report.mde.has_value());
            CHECK(r.report.tw.size() == c.k_values.size());
        }
        CHECK(t.to_csv().rfind("scene,regime,method,split,MDE,KS,TW@1,TW@3,CT@1,CT@3\n", 0) == 0);
    }
    SUBCASE("repeatable")
    {
        const auto a = cmd_reproduce("label-ablation", c).to_csv();
        const auto b = cmd_reproduce("label-ablation", c).to_csv();
        CHECK(a == b);
        CHECK(cmd_reproduce("label-ablation", c, true).to_csv() == a);
    }
    SUBCASE("unknown suite")
    {
        CHECK_THROWS_AS(cmd_reproduce("everything", c), InvalidConfig);
    }
}
