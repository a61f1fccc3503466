#include "csichart/siamese.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "csichart/errors.hpp"
#include "csichart/random.hpp"

namespace csichart {

std::string to_string(Regime r)
{
    switch (r) {
    case Regime::supervised:
        return "supervised";
    case Regime::semisupervised:
        return "semisupervised";
    case Regime::unsupervised:
        return "unsupervised";
    }
    return "unknown";
}

Regime parse_regime(const std::string &s)
{
    if (s == "supervised")
        return Regime::supervised;
    if (s == "semisupervised")
        return Regime::semisupervised;
    if (s == "unsupervised")
        return Regime::unsupervised;
    throw InvalidConfig("unknown regime: " + s);
}

LossConfig LossConfig::for_regime(Regime r)
{
    LossConfig c;
    c.regime = r;
    switch (r) {
    case Regime::supervised:
        c.pairwise_weight = 0.0;
        break;
    case Regime::unsupervised:
        c.anchor_weight = 0.0;
        break;
    case Regime::semisupervised:
        break;
    }
    return c;
}

void LossConfig::validate() const
{
    if (!(epsilon > 0.0))
        throw InvalidConfig("epsilon must be positive");
    if (anchor_weight < 0.0 || pairwise_weight < 0.0)
        throw InvalidConfig("loss weights must be nonnegative");
    if (regime == Regime::unsupervised && anchor_weight > 0.0)
        throw InvalidConfig("unsupervised regime cannot use an anchor term");
    if (anchor_weight == 0.0 && pairwise_weight == 0.0)
        throw InvalidConfig("both loss weights are zero");
}

double smooth_norm(const Eigen::Ref<const Eigen::VectorXd> &v, double epsilon)
{
    return std::sqrt(v.squaredNorm() + epsilon);
}

Eigen::VectorXd smooth_norm_gradient(const Eigen::Ref<const Eigen::VectorXd> &v, double epsilon)
{
    return v / smooth_norm(v, epsilon);
}

double sammon_weight(const Eigen::Ref<const Eigen::VectorXd> &x_n,
                     const Eigen::Ref<const Eigen::VectorXd> &x_m,
                     double epsilon)
{
    return 1.0 / smooth_norm(x_n - x_m, epsilon);
}

PairTerms sammon_pair_terms(const Eigen::MatrixXd &inputs,
                            const Eigen::MatrixXd &outputs,
                            double log_alpha,
                            double epsilon)
{
    if (inputs.cols() != outputs.cols())
        throw ShapeError("inputs and outputs have different sample counts");
    const Eigen::Index m = inputs.cols();
    const double alpha = std::exp(log_alpha);

    PairTerms t;
    t.d_outputs = Eigen::MatrixXd::Zero(outputs.rows(), m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double delta = std::sqrt((inputs.col(i) - inputs.col(j)).squaredNorm() + epsilon);
            const double w = 1.0 / delta;
            const Eigen::VectorXd dy = outputs.col(i) - outputs.col(j);
            const double s = std::sqrt(dy.squaredNorm() + epsilon);
            const double r = delta - alpha * s;
            t.sum += w * r * r;
            // d/dy_i of w r^2 = -2 w r alpha dy / s
            const double c = -2.0 * w * r * alpha / s;
            t.d_outputs.col(i) += c * dy;
            t.d_outputs.col(j) -= c * dy;
            t.d_log_alpha += -2.0 * w * r * alpha * s;
        }
    }
    t.pairs = static_cast<std::size_t>(m * (m - 1) / 2);
    return t;
}

namespace {

void check_batch(const PairBatch &batch, const Dataset &data, std::size_t min_size)
{
    if (batch.indices.size() < min_size)
        throw InvalidInput("batch needs at least " + std::to_string(min_size) + " samples");
    std::vector<std::uint8_t> seen(data.size(), 0);
    for (auto i : batch.indices) {
        if (i >= data.size())
            throw InvalidInput("batch index out of range");
        if (seen[i])
            throw InvalidInput("batch indices must be distinct");
        seen[i] = 1;
    }
}

Eigen::MatrixXd gather_features(const Dataset &data, const PairBatch &batch)
{
    Eigen::MatrixXd x(data.features.rows(), static_cast<Eigen::Index>(batch.indices.size()));
    for (std::size_t k = 0; k < batch.indices.size(); ++k)
        x.col(static_cast<Eigen::Index>(k)) = data.features.col(static_cast<Eigen::Index>(batch.indices[k]));
    return x;
}

struct AnchorTerms
{
    double mean = 0.0;
    std::size_t count = 0;
    Eigen::MatrixXd d_outputs;
};

AnchorTerms anchor_terms(const Eigen::MatrixXd &outputs, const PairBatch &batch, const Dataset &data)
{
    AnchorTerms a;
    a.d_outputs = Eigen::MatrixXd::Zero(outputs.rows(), outputs.cols());
    for (std::size_t k = 0; k < batch.indices.size(); ++k)
        if (data.anchored[batch.indices[k]])
            ++a.count;
    if (a.count == 0)
        return a;
    if (!data.has_positions || data.positions.rows() != outputs.rows())
        throw InvalidInput("anchors need positions matching the model output dimension");
    const double inv = 1.0 / static_cast<double>(a.count);
    for (std::size_t k = 0; k < batch.indices.size(); ++k) {
        const auto n = batch.indices[k];
        if (!data.anchored[n])
            continue;
        const auto col = static_cast<Eigen::Index>(k);
        const Eigen::VectorXd r = outputs.col(col) - data.positions.col(static_cast<Eigen::Index>(n));
        a.mean += r.squaredNorm() * inv;
        a.d_outputs.col(col) = 2.0 * inv * r;
    }
    return a;
}

} // namespace

LossResult pairwise_loss(const MlpModel &model, const PairBatch &batch, const Dataset &data, const LossConfig &cfg)
{
    check_batch(batch, data, 2);
    const Eigen::MatrixXd x = gather_features(data, batch);
    const auto fwd = forward_batch(model, x);
    auto terms = sammon_pair_terms(x, fwd.y, model.log_alpha, cfg.epsilon);
    const double inv = 1.0 / static_cast<double>(terms.pairs);
    LossResult r;
    r.loss = terms.sum * inv;
    r.grads = backward(model, fwd.tape, terms.d_outputs * inv);
    r.grads.log_alpha = cfg.trains_alpha() ? terms.d_log_alpha * inv : 0.0;
    return r;
}

LossResult anchor_loss(const MlpModel &model, const PairBatch &batch, const Dataset &data, const LossConfig &)
{
    check_batch(batch, data, 1);
    const Eigen::MatrixXd x = gather_features(data, batch);
    const auto fwd = forward_batch(model, x);
    auto terms = anchor_terms(fwd.y, batch, data);
    LossResult r;
    r.has_anchors = terms.count > 0;
    r.loss = terms.mean;
    r.grads = r.has_anchors ? backward(model, fwd.tape, terms.d_outputs) : GradientSet::zeros_like(model);
    return r;
}

CombinedLoss combined_loss(const MlpModel &model, const PairBatch &batch, const Dataset &data, const LossConfig &cfg)
{
    const bool use_pairs = cfg.pairwise_weight > 0.0;
    const bool use_anchors = cfg.anchor_weight > 0.0;
    check_batch(batch, data, use_pairs ? 2 : 1);
    const Eigen::MatrixXd x = gather_features(data, batch);
    const auto fwd = forward_batch(model, x);

    CombinedLoss c;
    Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(fwd.y.rows(), fwd.y.cols());
    double d_log_alpha = 0.0;
    if (use_anchors) {
        const auto a = anchor_terms(fwd.y, batch, data);
        c.has_anchors = a.count > 0;
        c.anchor = a.mean;
        upstream += cfg.anchor_weight * a.d_outputs;
    }
    if (use_pairs) {
        const auto p = sammon_pair_terms(x, fwd.y, model.log_alpha, cfg.epsilon);
        const double inv = 1.0 / static_cast<double>(p.pairs);
        c.pairwise = p.sum * inv;
        upstream += (cfg.pairwise_weight * inv) * p.d_outputs;
        if (cfg.trains_alpha())
            d_log_alpha = cfg.pairwise_weight * inv * p.d_log_alpha;
    }
    c.total = cfg.anchor_weight * c.anchor + cfg.pairwise_weight * c.pairwise;
    c.grads = backward(model, fwd.tape, upstream);
    c.grads.log_alpha = d_log_alpha;
    return c;
}

void TrainingLog::write_csv(const std::filesystem::path &path) const
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write training log: " + path.string());
    out << "epoch,anchor_loss,pairwise_loss,alpha,wall_seconds\n";
    out << std::setprecision(17);
    for (const auto &e : epochs)
        out << e.epoch << ',' << e.anchor_loss << ',' << e.pairwise_loss << ',' << e.alpha << ',' << e.wall_seconds
            << '\n';
}

std::vector<PairBatch> make_batches(std::size_t n, int batch_size, Rng &rng)
{
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    rng.shuffle(std::span<std::size_t>(order));
    const std::size_t n_batches = std::max<std::size_t>(1, n / static_cast<std::size_t>(batch_size));
    std::vector<PairBatch> batches(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) {
        const std::size_t lo = b * n / n_batches;
        const std::size_t hi = (b + 1) * n / n_batches;
        batches[b].indices.assign(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                  order.begin() + static_cast<std::ptrdiff_t>(hi));
    }
    return batches;
}

TrainResult train(MlpModel model, const Dataset &data, const LossConfig &loss_cfg, const SgdConfig &sgd_cfg)
{
    loss_cfg.validate();
    sgd_cfg.validate();
    data.validate();
    model.validate();
    if (data.size() == 0)
        throw InvalidInput("empty dataset");
    if (model.input_dim() != data.feature_dim())
        throw ShapeError("model input dimension does not match dataset features");

    const std::size_t anchors = data.anchor_count();
    if (loss_cfg.anchor_weight > 0.0 && anchors == 0)
        throw InvalidConfig("anchor term requested but the dataset has no anchored samples");
    if (loss_cfg.regime == Regime::supervised && anchors != data.size())
        throw InvalidInput("supervised training needs every sample anchored");
    if (loss_cfg.pairwise_weight > 0.0 && data.size() < 2)
        throw InvalidInput("pairwise loss needs at least two samples");

    Rng rng(sgd_cfg.seed);
    SgdOptimizer opt(sgd_cfg);
    TrainResult result;
    const auto t0 = std::chrono::steady_clock::now();
    for (int epoch = 0; epoch < sgd_cfg.epochs; ++epoch) {
        const auto batches = make_batches(data.size(), sgd_cfg.batch_size, rng);
        double anchor_sum = 0.0;
        double pair_sum = 0.0;
        std::size_t anchor_batches = 0;
        for (const auto &batch : batches) {
            auto loss = combined_loss(model, batch, data, loss_cfg);
            if (!loss_cfg.trains_alpha())
                loss.grads.log_alpha = 0.0;
            opt.step(model, loss.grads);
            if (loss.has_anchors) {
                anchor_sum += loss.anchor;
                ++anchor_batches;
            }
            pair_sum += loss.pairwise;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.anchor_loss = anchor_batches ? anchor_sum / static_cast<double>(anchor_batches) : 0.0;
        rec.pairwise_loss = pair_sum / static_cast<double>(batches.size());
        rec.alpha = model.alpha();
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.epochs.push_back(rec);
    }
    result.model = std::move(model);
    return result;
}

} // namespace csichart
