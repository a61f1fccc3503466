#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "csichart/baselines.hpp"
#include "csichart/channel.hpp"
#include "csichart/dataset.hpp"
#include "csichart/features.hpp"
#include "csichart/metrics.hpp"
#include "csichart/nn.hpp"
#include "csichart/siamese.hpp"

namespace csichart {

enum class Method { siamese, fcnn, sammon };
enum class SceneMode { uniform, t_intersection };

std::string to_string(Method m);
std::string to_string(SceneMode m);
Method parse_method(const std::string &s);
SceneMode parse_scene_mode(const std::string &s);

struct TraceConfig
{
    int train_traces = 20;
    int test_traces = 20;
    double speed = 10.0; // m/s
    double dt = 0.2;     // s
    TraceOptions options;
};

// Optimizer defaults per regime. The anchor term is in squared meters and
// the pairwise term in feature units, so their stable step sizes differ by
// an order of magnitude; the unsupervised chart also needs larger batches.
SgdConfig default_sgd(Regime regime);

struct ExperimentConfig
{
    SceneConfig scene;
    FeaturePipeline pipeline;
    SceneMode scene_mode = SceneMode::uniform;
    int num_train = 2000;
    // Half uniform, half on the square ring.
    int num_test = 400;
    TraceConfig traces;

    Regime regime = Regime::supervised;
    double anchor_fraction = 1.0;
    Method method = Method::siamese;
    LossConfig loss = LossConfig::for_regime(Regime::supervised);
    SgdConfig sgd = default_sgd(Regime::supervised);
    std::vector<int> hidden_layers = {512, 256, 128, 64, 32};
    SammonOptions sammon;
    std::vector<int> k_values = default_k_values;
    // Pairwise weight of the supervised Siamese cells in reproduce suites;
    // with 0 those cells would repeat the FCNN rows exactly.
    double suite_siamese_pairwise_weight = 1.0;
    // Reproduce suites give each cell its regime's default_sgd (keeping
    // sgd.seed); false applies `sgd` to every cell.
    bool suite_regime_sgd = true;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;

    // Throws InvalidConfig on regime/method/anchor_fraction conflicts.
    void validate() const;
    std::vector<int> layer_dims() const;
};

// Defaults per regime: 10% anchors for semisupervised, 100% otherwise.
ExperimentConfig default_config(Regime regime, Method method);

nlohmann::json to_json(const ExperimentConfig &cfg);
// Keys absent from `j` keep the defaults of the regime named in `j`.
ExperimentConfig config_from_json(const nlohmann::json &j);
ExperimentConfig load_config(const std::filesystem::path &path);
void save_config(const std::filesystem::path &path, const ExperimentConfig &cfg);

// Output directory with the CSICHART_OUTPUT_DIR environment override applied.
std::filesystem::path resolve_output_dir(const ExperimentConfig &cfg);

struct DatasetPair
{
    Dataset train;
    Dataset test;
};

// Synthesizes CSI and features for the train and test UEs in memory.
DatasetPair build_datasets(const ExperimentConfig &cfg);

struct GenerateResult
{
    std::filesystem::path train_path;
    std::filesystem::path test_path;
    DatasetPair data;
};

GenerateResult cmd_generate(const ExperimentConfig &cfg);

// Nonparametric embedding tied to the dataset it was computed on.
struct EmbeddingArtifact
{
    Eigen::MatrixXd points;
    std::uint64_t dataset_fingerprint = 0;
};

std::uint64_t dataset_fingerprint(const Dataset &data);
void save_embedding(const std::filesystem::path &path, const EmbeddingArtifact &e);
EmbeddingArtifact load_embedding(const std::filesystem::path &path);

struct TrainOutcome
{
    std::optional<MlpModel> model;
    std::optional<EmbeddingArtifact> embedding;
    TrainingLog log;
};

// The training set the method actually sees: supervised methods keep only
// the anchored samples; the other regimes use every sample.
Dataset training_view(const ExperimentConfig &cfg, const Dataset &train);

TrainOutcome train_method(const ExperimentConfig &cfg, const Dataset &train);

struct TrainArtifacts
{
    std::filesystem::path artifact_path; // checkpoint or embedding
    std::filesystem::path log_path;
    TrainOutcome outcome;
};

// Checks the dataset pipeline tag against cfg.pipeline (StaleDataset) and
// writes model.ckpt or embedding.bin/embedding.csv plus train_log.csv.
TrainArtifacts cmd_train(const ExperimentConfig &cfg, const std::filesystem::path &train_path);

// Evaluates a trained model or embedding on `data`. Embeddings only work on
// the dataset they were fitted to (Unsupported otherwise).
MetricReport evaluate_outcome(const ExperimentConfig &cfg, const TrainOutcome &outcome, const Dataset &data);

struct EvaluateArtifacts
{
    std::filesystem::path report_csv;
    std::filesystem::path report_txt;
    std::filesystem::path scatter_csv;
    MetricReport report;
};

// Writes report.csv, report.txt and scatter.csv
// (true_x,true_y,pred_x,pred_y,trace_id) into the output directory.
EvaluateArtifacts cmd_evaluate(const ExperimentConfig &cfg,
                               const std::filesystem::path &artifact_path,
                               const std::filesystem::path &dataset_path,
                               const std::string &prefix = "");

struct SummaryRow
{
    std::string scene;
    std::string regime;
    std::string method;
    std::string split;
    MetricReport report;
};

struct SummaryTable
{
    std::vector<SummaryRow> rows;
    std::vector<int> k_values;

    std::string to_csv() const;
    std::string to_text() const;
};

// Suites:
//   full-grid       {LoS, NLoS} x every valid (regime, method); supervised and
//                   semisupervised rows are test-set results, unsupervised rows
//                   are training-set charts
//   label-ablation  {LoS, NLoS} x 10% anchors: supervised FCNN and Siamese on
//                   the anchored subset, semisupervised Siamese on everything
//   t-intersection  {LoS, NLoS} x Siamese trained on trace positions
// `base` supplies scene, training and output settings; each cell overrides
// regime, method and anchors. `parallel` runs the cells concurrently; the
// table is identical either way.
SummaryTable cmd_reproduce(const std::string &suite, const ExperimentConfig &base, bool parallel = false);

} // namespace csichart
