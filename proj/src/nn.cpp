#include "csichart/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "csichart/errors.hpp"
#include "csichart/random.hpp"

namespace csichart {

std::size_t MlpModel::input_dim() const
{
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols());
}

std::size_t MlpModel::output_dim() const
{
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows());
}

namespace {

bool bit_equal(const double *a, const double *b, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i]))
            return false;
    return true;
}

template <class M> bool bit_equal(const M &a, const M &b)
{
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           bit_equal(a.data(), b.data(), static_cast<std::size_t>(a.size()));
}

} // namespace

bool MlpModel::operator==(const MlpModel &o) const
{
    if (layers.size() != o.layers.size() || seed != o.seed || !bit_equal(&log_alpha, &o.log_alpha, 1))
        return false;
    for (std::size_t l = 0; l < layers.size(); ++l)
        if (layers[l].activation != o.layers[l].activation || !bit_equal(layers[l].weight, o.layers[l].weight) ||
            !bit_equal(layers[l].bias, o.layers[l].bias))
            return false;
    return true;
}

double MlpModel::alpha() const { return std::exp(log_alpha); }

std::size_t MlpModel::parameter_count() const
{
    std::size_t n = 0;
    for (const auto &l : layers)
        n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

std::vector<int> MlpModel::layer_dims() const
{
    std::vector<int> dims;
    if (layers.empty())
        return dims;
    dims.push_back(static_cast<int>(layers.front().weight.cols()));
    for (const auto &l : layers)
        dims.push_back(static_cast<int>(l.weight.rows()));
    return dims;
}

void MlpModel::validate() const
{
    if (layers.empty())
        throw ShapeError("model has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto &l = layers[i];
        if (l.weight.rows() == 0 || l.weight.cols() == 0)
            throw ShapeError("layer " + std::to_string(i) + " has an empty weight matrix");
        if (l.bias.size() != l.weight.rows())
            throw ShapeError("layer " + std::to_string(i) + " bias length does not match weight rows");
        if (i + 1 < layers.size() && layers[i + 1].weight.cols() != l.weight.rows())
            throw ShapeError("layer " + std::to_string(i) + " output does not chain into the next layer");
        const auto expected = (i + 1 == layers.size()) ? Activation::linear : Activation::relu;
        if (l.activation != expected)
            throw ShapeError("layer " + std::to_string(i) + " has the wrong activation");
    }
}

GradientSet GradientSet::zeros_like(const MlpModel &model)
{
    GradientSet g;
    for (const auto &l : model.layers) {
        g.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
    return g;
}

GradientSet &GradientSet::operator+=(const GradientSet &other)
{
    if (other.weight.size() != weight.size())
        throw ShapeError("gradient sets have different layer counts");
    for (std::size_t i = 0; i < weight.size(); ++i) {
        weight[i] += other.weight[i];
        bias[i] += other.bias[i];
    }
    log_alpha += other.log_alpha;
    return *this;
}

GradientSet &GradientSet::operator*=(double s)
{
    for (std::size_t i = 0; i < weight.size(); ++i) {
        weight[i] *= s;
        bias[i] *= s;
    }
    log_alpha *= s;
    return *this;
}

double GradientSet::max_abs() const
{
    double m = std::abs(log_alpha);
    for (std::size_t i = 0; i < weight.size(); ++i) {
        if (weight[i].size() > 0)
            m = std::max(m, weight[i].cwiseAbs().maxCoeff());
        if (bias[i].size() > 0)
            m = std::max(m, bias[i].cwiseAbs().maxCoeff());
    }
    return m;
}

void GradientSet::check_congruent(const MlpModel &model) const
{
    if (weight.size() != model.layers.size() || bias.size() != model.layers.size())
        throw ShapeError("gradient layer count does not match model");
    for (std::size_t i = 0; i < weight.size(); ++i) {
        const auto &l = model.layers[i];
        if (weight[i].rows() != l.weight.rows() || weight[i].cols() != l.weight.cols() || bias[i].size() != l.bias.size())
            throw ShapeError("gradient shape does not match layer " + std::to_string(i));
    }
}

void SgdConfig::validate() const
{
    if (!(learning_rate > 0.0))
        throw InvalidConfig("learning_rate must be positive");
    if (l2_lambda < 0.0)
        throw InvalidConfig("l2_lambda must be nonnegative");
    if (batch_size < 2)
        throw InvalidConfig("batch_size must be at least 2");
    if (epochs < 1)
        throw InvalidConfig("epochs must be positive");
    if (momentum < 0.0 || momentum >= 1.0)
        throw InvalidConfig("momentum must lie in [0, 1)");
}

MlpModel init_model(std::span<const int> layer_dims, std::uint64_t seed)
{
    if (layer_dims.size() < 2)
        throw InvalidConfig("layer_dims needs an input and at least one output dimension");
    for (int d : layer_dims)
        if (d <= 0)
            throw InvalidConfig("layer dimensions must be positive");

    Rng rng(seed);
    MlpModel model;
    model.seed = seed;
    const std::size_t n_layers = layer_dims.size() - 1;
    for (std::size_t i = 0; i < n_layers; ++i) {
        const int in = layer_dims[i];
        const int out = layer_dims[i + 1];
        DenseLayer layer;
        layer.activation = (i + 1 == n_layers) ? Activation::linear : Activation::relu;
        // He-uniform for layers feeding a relu, Glorot-like fan-in bound for the linear head.
        const double gain = layer.activation == Activation::relu ? 6.0 : 3.0;
        const double bound = std::sqrt(gain / in);
        layer.weight.resize(out, in);
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c)
                layer.weight(r, c) = rng.uniform(-bound, bound);
        layer.bias = Eigen::VectorXd::Zero(out);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

BatchForwardResult forward_batch(const MlpModel &model, const Eigen::MatrixXd &x)
{
    if (model.layers.empty())
        throw ShapeError("model has no layers");
    if (static_cast<std::size_t>(x.rows()) != model.input_dim())
        throw ShapeError("input has " + std::to_string(x.rows()) + " rows, model expects " +
                         std::to_string(model.input_dim()));

    BatchForwardResult r;
    r.tape.inputs.reserve(model.layers.size());
    r.tape.pre_activations.reserve(model.layers.size());
    Eigen::MatrixXd a = x;
    for (const auto &l : model.layers) {
        Eigen::MatrixXd z = l.weight * a;
        z.colwise() += l.bias;
        r.tape.inputs.push_back(std::move(a));
        a = l.activation == Activation::relu ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
        r.tape.pre_activations.push_back(std::move(z));
    }
    r.y = std::move(a);
    return r;
}

ForwardResult forward(const MlpModel &model, const Eigen::VectorXd &x)
{
    auto b = forward_batch(model, x);
    return {b.y.col(0), std::move(b.tape)};
}

Eigen::MatrixXd predict(const MlpModel &model, const Eigen::MatrixXd &x)
{
    if (static_cast<std::size_t>(x.rows()) != model.input_dim())
        throw ShapeError("input dimension does not match model");
    Eigen::MatrixXd a = x;
    for (const auto &l : model.layers) {
        Eigen::MatrixXd z = l.weight * a;
        z.colwise() += l.bias;
        a = l.activation == Activation::relu ? Eigen::MatrixXd(z.cwiseMax(0.0)) : std::move(z);
    }
    return a;
}

GradientSet backward(const MlpModel &model, const ForwardTape &tape, const Eigen::MatrixXd &upstream)
{
    const std::size_t n = model.layers.size();
    if (tape.inputs.size() != n || tape.pre_activations.size() != n)
        throw ShapeError("tape does not match model depth");
    const Eigen::Index batch = tape.inputs.front().cols();
    if (upstream.rows() != static_cast<Eigen::Index>(model.output_dim()) || upstream.cols() != batch)
        throw ShapeError("upstream gradient shape does not match model output and batch");
    for (std::size_t i = 0; i < n; ++i) {
        const auto &l = model.layers[i];
        if (tape.inputs[i].rows() != l.weight.cols() || tape.pre_activations[i].rows() != l.weight.rows() ||
            tape.inputs[i].cols() != batch || tape.pre_activations[i].cols() != batch)
            throw ShapeError("tape shape does not match layer " + std::to_string(i));
    }

    GradientSet g;
    g.weight.resize(n);
    g.bias.resize(n);
    Eigen::MatrixXd delta = upstream;
    for (std::size_t k = n; k-- > 0;) {
        const auto &l = model.layers[k];
        if (l.activation == Activation::relu)
            delta = delta.cwiseProduct((tape.pre_activations[k].array() > 0.0).cast<double>().matrix());
        g.weight[k] = delta * tape.inputs[k].transpose();
        g.bias[k] = delta.rowwise().sum();
        if (k > 0)
            delta = l.weight.transpose() * delta;
    }
    return g;
}

MlpModel sgd_step(MlpModel model, const GradientSet &grads, const SgdConfig &cfg)
{
    grads.check_congruent(model);
    const double lr = cfg.learning_rate;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        auto &l = model.layers[i];
        l.weight -= lr * (grads.weight[i] + cfg.l2_lambda * l.weight);
        l.bias -= lr * grads.bias[i];
    }
    model.log_alpha -= lr * grads.log_alpha;
    return model;
}

void SgdOptimizer::step(MlpModel &model, const GradientSet &grads)
{
    if (cfg_.momentum == 0.0) {
        model = sgd_step(std::move(model), grads, cfg_);
        return;
    }
    grads.check_congruent(model);
    if (!has_velocity_) {
        velocity_ = GradientSet::zeros_like(model);
        has_velocity_ = true;
    }
    const double lr = cfg_.learning_rate;
    const double mu = cfg_.momentum;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        auto &l = model.layers[i];
        velocity_.weight[i] = mu * velocity_.weight[i] + grads.weight[i] + cfg_.l2_lambda * l.weight;
        velocity_.bias[i] = mu * velocity_.bias[i] + grads.bias[i];
        l.weight -= lr * velocity_.weight[i];
        l.bias -= lr * velocity_.bias[i];
    }
    velocity_.log_alpha = mu * velocity_.log_alpha + grads.log_alpha;
    model.log_alpha -= lr * velocity_.log_alpha;
}

namespace {
constexpr std::string_view checkpoint_magic{"CSIMLP\0\0", 8};
constexpr std::uint64_t checkpoint_version = 1;
} // namespace

void save_checkpoint(const std::filesystem::path &path, const MlpModel &model)
{
    model.validate();
    detail::BinaryWriter w(path);
    w.magic(checkpoint_magic);
    w.u64(checkpoint_version);
    w.u64(model.layers.size());
    w.u64(model.input_dim());
    for (const auto &l : model.layers) {
        w.u64(static_cast<std::uint64_t>(l.weight.rows()));
        w.u64(l.activation == Activation::relu ? 0 : 1);
    }
    for (const auto &l : model.layers) {
        const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = l.weight;
        w.f64s(rm.data(), static_cast<std::size_t>(rm.size()));
        w.f64s(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
    w.f64(model.log_alpha);
    w.u64(model.seed);
    w.finish();
}

MlpModel load_checkpoint(const std::filesystem::path &path)
{
    detail::BinaryReader r(path);
    r.expect_magic(checkpoint_magic);
    const auto version = r.u64();
    if (version != checkpoint_version)
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    const auto n_layers = r.u64();
    if (n_layers == 0 || n_layers > 1024)
        throw IoError("implausible layer count in checkpoint");
    auto in = static_cast<Eigen::Index>(r.u64());
    MlpModel model;
    model.layers.resize(n_layers);
    for (auto &l : model.layers) {
        const auto out = static_cast<Eigen::Index>(r.u64());
        const auto act = r.u64();
        if (out <= 0 || in <= 0 || out > (1 << 20) || in > (1 << 20) || act > 1)
            throw IoError("corrupt layer header in checkpoint");
        l.activation = act == 0 ? Activation::relu : Activation::linear;
        l.weight.resize(out, in);
        l.bias.resize(out);
        in = out;
    }
    for (auto &l : model.layers) {
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(l.weight.rows(), l.weight.cols());
        r.f64s(rm.data(), static_cast<std::size_t>(rm.size()));
        l.weight = rm;
        r.f64s(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
    model.log_alpha = r.f64();
    model.seed = r.u64();
    r.expect_end();
    model.validate();
    return model;
}

} // namespace csichart
