#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace csichart {

enum class Activation { relu, linear };

struct DenseLayer
{
    Eigen::MatrixXd weight; // out x in
    Eigen::VectorXd bias;   // out
    Activation activation = Activation::relu;
};

// Dense feedforward tower shared by both branches of the Siamese network.
// The distance scale is kept as log(alpha) so alpha stays positive under
// unconstrained updates.
struct MlpModel
{
    std::vector<DenseLayer> layers;
    double log_alpha = 0.0;
    std::uint64_t seed = 0;

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    double alpha() const;
    std::size_t parameter_count() const;
    std::vector<int> layer_dims() const;

    // Throws ShapeError if layer dimensions do not chain or the activation
    // pattern is not relu...relu,linear.
    void validate() const;

    // Bit-exact comparison of every parameter (distinguishes -0.0 and NaN payloads).
    bool operator==(const MlpModel &) const;
};

struct GradientSet
{
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::VectorXd> bias;
    double log_alpha = 0.0;

    static GradientSet zeros_like(const MlpModel &model);

    GradientSet &operator+=(const GradientSet &other);
    GradientSet &operator*=(double s);
    double max_abs() const;
    void check_congruent(const MlpModel &model) const;
};

struct SgdConfig
{
    double learning_rate = 1e-3;
    double l2_lambda = 1e-5;
    int batch_size = 200;
    int epochs = 100;
    std::uint64_t seed = 0;
    // Heavy-ball momentum used by SgdOptimizer; 0 gives plain SGD.
    double momentum = 0.0;

    void validate() const;
};

// Pre-activations and layer inputs for a batch (one column per sample).
struct ForwardTape
{
    std::vector<Eigen::MatrixXd> inputs;
    std::vector<Eigen::MatrixXd> pre_activations;
};

struct ForwardResult
{
    Eigen::VectorXd y;
    ForwardTape tape;
};

struct BatchForwardResult
{
    Eigen::MatrixXd y; // output_dim x batch
    ForwardTape tape;
};

MlpModel init_model(std::span<const int> layer_dims, std::uint64_t seed);

ForwardResult forward(const MlpModel &model, const Eigen::VectorXd &x);
BatchForwardResult forward_batch(const MlpModel &model, const Eigen::MatrixXd &x);

// Outputs only; columns of x are samples.
Eigen::MatrixXd predict(const MlpModel &model, const Eigen::MatrixXd &x);

// Gradient of the loss w.r.t. all weights and biases given dLoss/dy for each
// column in the tape. Contributions of all columns are summed.
GradientSet backward(const MlpModel &model, const ForwardTape &tape, const Eigen::MatrixXd &upstream);

MlpModel sgd_step(MlpModel model, const GradientSet &grads, const SgdConfig &cfg);

class SgdOptimizer
{
public:
    explicit SgdOptimizer(SgdConfig cfg) : cfg_(cfg) {}

    void step(MlpModel &model, const GradientSet &grads);

private:
    SgdConfig cfg_;
    GradientSet velocity_;
    bool has_velocity_ = false;
};

// Checkpoint container: magic, format version, layer dims, activations,
// row-major weights, biases, log_alpha and seed, all as raw little-endian
// 64-bit values.
void save_checkpoint(const std::filesystem::path &path, const MlpModel &model);
MlpModel load_checkpoint(const std::filesystem::path &path);

} // namespace csichart
