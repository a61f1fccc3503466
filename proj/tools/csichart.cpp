// csichart: generate datasets, train, evaluate and run experiment suites.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "csichart/errors.hpp"
#include "csichart/runner.hpp"

using namespace csichart;
namespace fs = std::filesystem;

namespace {

// Every flag is optional; only the ones given override the config.
struct Overrides
{
    std::optional<std::string> config;
    std::optional<std::string> regime, method, scene_mode;
    std::optional<bool> los;
    std::optional<int> num_train, num_test, train_traces, test_traces;
    std::optional<double> trace_speed, trace_dt;
    std::optional<int> antennas, subcarriers, scatterers;
    std::optional<double> snr_db, scatter_amplitude;
    std::optional<std::uint64_t> scene_seed;
    std::optional<double> sigma;
    std::optional<double> anchor_fraction;
    std::optional<double> anchor_weight, pairwise_weight, epsilon;
    std::optional<double> lr, l2, momentum;
    std::optional<int> batch_size, epochs;
    std::optional<std::uint64_t> sgd_seed;
    std::optional<std::vector<int>> hidden;
    std::optional<int> sammon_iterations;
    std::optional<std::vector<int>> k_values;
    std::optional<double> suite_pairwise_weight;
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
};

void add_config_flags(CLI::App &cmd, Overrides &o)
{
    cmd.add_option("-c,--config", o.config, "JSON config file (missing keys take regime defaults)");
    cmd.add_option("--regime", o.regime, "supervised | semisupervised | unsupervised");
    cmd.add_option("--method", o.method, "siamese | fcnn | sammon");
    cmd.add_option("--scene-mode", o.scene_mode, "uniform | t-intersection");
    cmd.add_option("--los", o.los, "Include the line-of-sight path (true/false)");
    cmd.add_option("--num-train", o.num_train, "Training UEs (uniform mode)");
    cmd.add_option("--num-test", o.num_test, "Test UEs, half uniform and half on the square ring");
    cmd.add_option("--train-traces", o.train_traces, "Training traces (t-intersection mode)");
    cmd.add_option("--test-traces", o.test_traces, "Test traces (t-intersection mode)");
    cmd.add_option("--trace-speed", o.trace_speed, "UE speed along traces in m/s");
    cmd.add_option("--trace-dt", o.trace_dt, "Sampling interval along traces in s");
    cmd.add_option("--antennas", o.antennas, "BS antennas B");
    cmd.add_option("--subcarriers", o.subcarriers, "Subcarriers S");
    cmd.add_option("--scatterers", o.scatterers, "Number of point scatterers");
    cmd.add_option("--scatter-amplitude", o.scatter_amplitude, "Gain applied to scattered paths");
    cmd.add_option("--snr-db", o.snr_db, "Per-entry SNR in dB (inf for noiseless)");
    cmd.add_option("--scene-seed", o.scene_seed, "Seed of the scatterer draw");
    cmd.add_option("--sigma", o.sigma, "Feature scaling exponent");
    cmd.add_option("--anchor-fraction", o.anchor_fraction, "Fraction of training UEs with known positions");
    cmd.add_option("--anchor-weight", o.anchor_weight, "Weight of the anchor term");
    cmd.add_option("--pairwise-weight", o.pairwise_weight, "Weight of the pairwise Sammon term");
    cmd.add_option("--epsilon", o.epsilon, "Smoothing constant of the norm");
    cmd.add_option("--lr", o.lr, "SGD learning rate");
    cmd.add_option("--l2", o.l2, "L2 penalty on weights");
    cmd.add_option("--momentum", o.momentum, "Heavy-ball momentum (0 = plain SGD)");
    cmd.add_option("--batch-size", o.batch_size, "Minibatch size");
    cmd.add_option("--epochs", o.epochs, "Training epochs");
    cmd.add_option("--sgd-seed", o.sgd_seed, "Seed of the minibatch shuffle");
    cmd.add_option("--hidden", o.hidden, "Hidden layer widths")->expected(1, -1);
    cmd.add_option("--sammon-iterations", o.sammon_iterations, "Iterations of nonparametric Sammon");
    cmd.add_option("--k", o.k_values, "Neighborhood sizes for TW/CT")->expected(1, -1);
    cmd.add_option("--suite-pairwise-weight", o.suite_pairwise_weight,
                   "Pairwise weight of supervised Siamese cells in reproduce suites");
    cmd.add_option("-o,--output-dir", o.output_dir, "Output directory (CSICHART_OUTPUT_DIR overrides)");
    cmd.add_option("--seed", o.seed, "Experiment seed (positions, noise, anchors, init)");
}

template <class T> void set(T &field, const std::optional<T> &v)
{
    if (v)
        field = *v;
}

ExperimentConfig build_config(const Overrides &o)
{
    ExperimentConfig c;
    if (o.config) {
        c = load_config(*o.config);
        if (o.regime || o.method) {
            // Switching regime resets the regime-dependent defaults.
            const Regime r = o.regime ? parse_regime(*o.regime) : c.regime;
            const Method m = o.method ? parse_method(*o.method) : c.method;
            if (r != c.regime) {
                c.regime = r;
                c.loss = LossConfig::for_regime(r);
                c.anchor_fraction = default_config(r, m).anchor_fraction;
                const auto seed = c.sgd.seed;
                c.sgd = default_sgd(r);
                c.sgd.seed = seed;
            }
            c.method = m;
        }
    } else {
        c = default_config(o.regime ? parse_regime(*o.regime) : Regime::supervised,
                           o.method ? parse_method(*o.method) : Method::siamese);
    }
    if (o.scene_mode)
        c.scene_mode = parse_scene_mode(*o.scene_mode);
    set(c.scene.los, o.los);
    set(c.num_train, o.num_train);
    set(c.num_test, o.num_test);
    set(c.traces.train_traces, o.train_traces);
    set(c.traces.test_traces, o.test_traces);
    set(c.traces.speed, o.trace_speed);
    set(c.traces.dt, o.trace_dt);
    set(c.scene.num_antennas, o.antennas);
    set(c.scene.num_subcarriers, o.subcarriers);
    set(c.scene.num_scatterers, o.scatterers);
    set(c.scene.scatter_amplitude, o.scatter_amplitude);
    set(c.scene.snr_db, o.snr_db);
    set(c.scene.seed, o.scene_seed);
    set(c.pipeline.sigma, o.sigma);
    set(c.anchor_fraction, o.anchor_fraction);
    set(c.loss.anchor_weight, o.anchor_weight);
    set(c.loss.pairwise_weight, o.pairwise_weight);
    set(c.loss.epsilon, o.epsilon);
    set(c.sgd.learning_rate, o.lr);
    set(c.sgd.l2_lambda, o.l2);
    set(c.sgd.momentum, o.momentum);
    set(c.sgd.batch_size, o.batch_size);
    set(c.sgd.epochs, o.epochs);
    set(c.sgd.seed, o.sgd_seed);
    set(c.hidden_layers, o.hidden);
    set(c.sammon.iterations, o.sammon_iterations);
    set(c.k_values, o.k_values);
    set(c.suite_siamese_pairwise_weight, o.suite_pairwise_weight);
    if (o.output_dir)
        c.output_dir = *o.output_dir;
    set(c.seed, o.seed);
    c.validate();
    return c;
}

int exit_code(const std::exception &e)
{
    if (dynamic_cast<const InvalidConfig *>(&e))
        return 2;
    if (dynamic_cast<const IoError *>(&e))
        return 3;
    if (dynamic_cast<const StaleDataset *>(&e))
        return 4;
    if (dynamic_cast<const Unsupported *>(&e))
        return 5;
    return 1;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"CSI positioning and channel charting with Siamese networks"};
    app.require_subcommand(1);

    Overrides gen_o, train_o, eval_o, repro_o;

    auto *gen = app.add_subcommand("generate", "Synthesize train and test datasets");
    add_config_flags(*gen, gen_o);

    auto *tr = app.add_subcommand("train", "Train a model (or fit a Sammon embedding) on a dataset");
    add_config_flags(*tr, train_o);
    std::string train_data;
    tr->add_option("--data", train_data, "Training dataset (default: <output-dir>/train.ds)");

    auto *ev = app.add_subcommand("evaluate", "Evaluate a checkpoint or embedding on a dataset");
    add_config_flags(*ev, eval_o);
    std::string artifact, eval_data, prefix;
    ev->add_option("--artifact", artifact, "model.ckpt or embedding.bin (default: <output-dir>/model.ckpt)");
    ev->add_option("--data", eval_data, "Dataset to evaluate on (default: <output-dir>/test.ds)");
    ev->add_option("--prefix", prefix, "Prefix for the report file names");

    auto *rep = app.add_subcommand("reproduce", "Run an experiment suite and write a summary table");
    add_config_flags(*rep, repro_o);
    std::string suite = "full-grid";
    bool parallel = false;
    rep->add_option("suite", suite, "full-grid | label-ablation | t-intersection");
    rep->add_flag("--parallel", parallel, "Run independent cells concurrently");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto cfg = build_config(gen_o);
            const auto r = cmd_generate(cfg);
            std::printf("train: %s (%zu samples, %zu anchored)\ntest:  %s (%zu samples)\n", r.train_path.c_str(),
                        r.data.train.size(), r.data.train.anchor_count(), r.test_path.c_str(), r.data.test.size());
        } else if (*tr) {
            const auto cfg = build_config(train_o);
            const fs::path data = train_data.empty() ? resolve_output_dir(cfg) / "train.ds" : fs::path(train_data);
            const auto r = cmd_train(cfg, data);
            std::printf("artifact: %s\nlog:      %s\n", r.artifact_path.c_str(), r.log_path.c_str());
        } else if (*ev) {
            const auto cfg = build_config(eval_o);
            const fs::path dir = resolve_output_dir(cfg);
            const fs::path a = artifact.empty() ? dir / "model.ckpt" : fs::path(artifact);
            const fs::path d = eval_data.empty() ? dir / "test.ds" : fs::path(eval_data);
            const auto r = cmd_evaluate(cfg, a, d, prefix);
            std::cout << r.report.to_table() << "report: " << r.report_csv.string()
                      << "\nscatter: " << r.scatter_csv.string() << '\n';
        } else if (*rep) {
            const auto cfg = build_config(repro_o);
            const auto table = cmd_reproduce(suite, cfg, parallel);
            std::cout << table.to_text();
        }
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code(e);
    }
    return 0;
}
