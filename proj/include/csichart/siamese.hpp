#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csichart/dataset.hpp"
#include "csichart/nn.hpp"

namespace csichart {

enum class Regime { supervised, semisupervised, unsupervised };

std::string to_string(Regime r);
Regime parse_regime(const std::string &s);

struct LossConfig
{
    double epsilon = 1e-6;
    double anchor_weight = 1.0;
    double pairwise_weight = 1.0;
    Regime regime = Regime::unsupervised;

    // Regime defaults: supervised is pure regression (pairwise weight 0),
    // unsupervised drops the anchor term, semisupervised keeps both.
    static LossConfig for_regime(Regime r);

    bool trains_alpha() const { return regime == Regime::semisupervised; }
    void validate() const;
};

// Batch of distinct dataset indices; all unordered pairs inside it are used.
struct PairBatch
{
    std::vector<std::size_t> indices;

    std::size_t pair_count() const { return indices.size() * (indices.size() - 1) / 2; }
};

// sqrt(||v||^2 + eps)
double smooth_norm(const Eigen::Ref<const Eigen::VectorXd> &v, double epsilon);
Eigen::VectorXd smooth_norm_gradient(const Eigen::Ref<const Eigen::VectorXd> &v, double epsilon);

// 1 / smooth_norm(x_n - x_m); never exceeds 1/sqrt(eps).
double sammon_weight(const Eigen::Ref<const Eigen::VectorXd> &x_n,
                     const Eigen::Ref<const Eigen::VectorXd> &x_m,
                     double epsilon);

struct PairTerms
{
    double sum = 0.0;       // sum over pairs, not normalized
    std::size_t pairs = 0;
    Eigen::MatrixXd d_outputs; // dsum/dy, same shape as the outputs
    double d_log_alpha = 0.0;
};

// Weighted Sammon residuals for all unordered column pairs:
// sum w_nm (||x_n - x_m||_eps - alpha ||y_n - y_m||_eps)^2 with
// w_nm = 1/||x_n - x_m||_eps. Pairs are visited in (n < m) lexicographic
// order so accumulation is reproducible.
PairTerms sammon_pair_terms(const Eigen::MatrixXd &inputs,
                            const Eigen::MatrixXd &outputs,
                            double log_alpha,
                            double epsilon);

struct LossResult
{
    double loss = 0.0;
    GradientSet grads;
    // False when an anchor loss was requested on a batch without anchors.
    bool has_anchors = true;
};

// Mean of the Sammon pair terms over the batch pairs. log_alpha receives a
// gradient only when cfg.trains_alpha().
LossResult pairwise_loss(const MlpModel &model, const PairBatch &batch, const Dataset &data, const LossConfig &cfg);

// Mean of ||f(x_n) - anchor_n||^2 over the anchored batch samples.
LossResult anchor_loss(const MlpModel &model, const PairBatch &batch, const Dataset &data, const LossConfig &cfg);

// anchor_weight * anchor_loss + pairwise_weight * pairwise_loss with one
// shared forward pass. Terms with zero weight are skipped.
struct CombinedLoss
{
    double total = 0.0;
    double anchor = 0.0;
    double pairwise = 0.0;
    bool has_anchors = false;
    GradientSet grads;
};
CombinedLoss combined_loss(const MlpModel &model, const PairBatch &batch, const Dataset &data, const LossConfig &cfg);

struct EpochRecord
{
    int epoch = 0;
    double anchor_loss = 0.0;
    double pairwise_loss = 0.0;
    double alpha = 1.0;
    double wall_seconds = 0.0;
};

struct TrainingLog
{
    std::vector<EpochRecord> epochs;

    void write_csv(const std::filesystem::path &path) const;
};

struct TrainResult
{
    MlpModel model;
    TrainingLog log;
};

// Splits a shuffled index range into near-equal batches of at least
// batch_size samples (one batch when n < batch_size).
std::vector<PairBatch> make_batches(std::size_t n, int batch_size, Rng &rng);

TrainResult train(MlpModel model, const Dataset &data, const LossConfig &loss_cfg, const SgdConfig &sgd_cfg);

} // namespace csichart
