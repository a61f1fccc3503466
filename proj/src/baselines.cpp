#include "csichart/baselines.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "csichart/errors.hpp"
#include "csichart/random.hpp"

namespace csichart {

namespace {

double mean_pairwise_distance(const Eigen::MatrixXd &p)
{
    const Eigen::Index n = p.cols();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            sum += (p.col(i) - p.col(j)).norm();
    return n > 1 ? sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1)) : 0.0;
}

// Packed upper-triangle storage for the smoothed feature distances.
class PairTable
{
public:
    explicit PairTable(Eigen::Index n) : n_(n), values_(static_cast<std::size_t>(n * (n - 1) / 2)) {}

    double &at(Eigen::Index i, Eigen::Index j) { return values_[index(i, j)]; }
    double at(Eigen::Index i, Eigen::Index j) const { return values_[index(i, j)]; }

private:
    std::size_t index(Eigen::Index i, Eigen::Index j) const
    {
        return static_cast<std::size_t>(i * (2 * n_ - i - 1) / 2 + (j - i - 1));
    }

    Eigen::Index n_;
    std::vector<double> values_;
};

} // namespace

double sammon_loss(const Eigen::MatrixXd &features, const Eigen::MatrixXd &points, double epsilon)
{
    if (features.cols() != points.cols())
        throw ShapeError("features and points differ in sample count");
    const Eigen::Index n = features.cols();
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double delta = std::sqrt((features.col(i) - features.col(j)).squaredNorm() + epsilon);
            const double d = std::sqrt((points.col(i) - points.col(j)).squaredNorm() + epsilon);
            loss += (delta - d) * (delta - d) / delta;
        }
    return loss;
}

Eigen::MatrixXd pca_embedding(const Eigen::MatrixXd &features, int d)
{
    if (d < 1)
        throw InvalidConfig("embedding dimension must be positive");
    const Eigen::VectorXd mean = features.rowwise().mean();
    const Eigen::MatrixXd centered = features.colwise() - mean;
    Eigen::MatrixXd points = Eigen::MatrixXd::Zero(d, features.cols());
    // Decompose whichever of the covariance (D x D) and Gram (N x N) matrices is smaller.
    if (features.rows() <= features.cols()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered * centered.transpose());
        const Eigen::Index m = features.rows();
        for (int k = 0; k < d && k < m; ++k)
            points.row(k) = eig.eigenvectors().col(m - 1 - k).transpose() * centered;
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered.transpose() * centered);
        const Eigen::Index m = features.cols();
        for (int k = 0; k < d && k < m; ++k) {
            const double lambda = std::max(0.0, eig.eigenvalues()(m - 1 - k));
            points.row(k) = std::sqrt(lambda) * eig.eigenvectors().col(m - 1 - k).transpose();
        }
    }
    const double target = mean_pairwise_distance(features);
    const double current = mean_pairwise_distance(points);
    if (current > 0.0)
        points *= target / current;
    return points;
}

SammonResult sammon_nonparametric(const Eigen::MatrixXd &features, const SammonOptions &opts)
{
    const Eigen::Index n = features.cols();
    if (n < 2)
        throw InvalidInput("Sammon's mapping needs at least two samples");
    if (opts.d_prime < 1 || opts.iterations < 0 || !(opts.learning_rate > 0.0) || !(opts.epsilon > 0.0) ||
        opts.momentum < 0.0 || opts.momentum >= 1.0)
        throw InvalidConfig("invalid Sammon options");

    PairTable delta(n);
    Eigen::VectorXd weight_sum = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dl = std::sqrt((features.col(i) - features.col(j)).squaredNorm() + opts.epsilon);
            delta.at(i, j) = dl;
            weight_sum(i) += 1.0 / dl;
            weight_sum(j) += 1.0 / dl;
        }

    Eigen::MatrixXd y = pca_embedding(features, opts.d_prime);
    {
        // Tiny seeded jitter breaks exact symmetries (e.g. rank-deficient PCA).
        Rng rng(opts.seed);
        const double scale = 1e-6 * std::max(1.0, mean_pairwise_distance(features));
        for (Eigen::Index c = 0; c < y.cols(); ++c)
            for (Eigen::Index r = 0; r < y.rows(); ++r)
                y(r, c) += scale * rng.normal();
    }

    const Eigen::Index dim = y.rows();
    auto loss_and_grad = [&](const Eigen::MatrixXd &pts, Eigen::MatrixXd &grad) {
        double loss = 0.0;
        grad.setZero(pts.rows(), pts.cols());
        std::vector<double> diff(static_cast<std::size_t>(dim));
        for (Eigen::Index i = 0; i < n; ++i) {
            const double *yi = pts.col(i).data();
            double *gi = grad.col(i).data();
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double *yj = pts.col(j).data();
                double sq = 0.0;
                for (Eigen::Index r = 0; r < dim; ++r) {
                    diff[static_cast<std::size_t>(r)] = yi[r] - yj[r];
                    sq += diff[static_cast<std::size_t>(r)] * diff[static_cast<std::size_t>(r)];
                }
                const double dl = delta.at(i, j);
                const double s = std::sqrt(sq + opts.epsilon);
                const double res = dl - s;
                loss += res * res / dl;
                const double c = -2.0 * res / (dl * s);
                double *gj = grad.col(j).data();
                for (Eigen::Index r = 0; r < dim; ++r) {
                    gi[r] += c * diff[static_cast<std::size_t>(r)];
                    gj[r] -= c * diff[static_cast<std::size_t>(r)];
                }
            }
        }
        return loss;
    };

    SammonResult res;
    Eigen::MatrixXd grad;
    Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(y.rows(), y.cols());
    double loss = loss_and_grad(y, grad);
    res.best_loss = loss;
    res.embedding.points = y;
    for (int it = 0; it < opts.iterations; ++it) {
        // Per-point step scaled by 1/(2 sum_m w_nm), the diagonal of the
        // Gauss-Newton approximation for a converged configuration.
        for (Eigen::Index i = 0; i < n; ++i)
            velocity.col(i) = opts.momentum * velocity.col(i) - opts.learning_rate * grad.col(i) / (2.0 * weight_sum(i));
        y += velocity;
        loss = loss_and_grad(y, grad);
        if (loss < res.best_loss) {
            res.best_loss = loss;
            res.embedding.points = y;
        }
        res.best_loss_history.push_back(res.best_loss);
    }
    return res;
}

TrainResult train_fcnn(MlpModel model, const Dataset &data, const SgdConfig &sgd_cfg)
{
    if (data.size() == 0 || data.anchor_count() == 0)
        throw InvalidInput("FCNN training needs anchored samples");
    if (data.anchor_count() != data.size())
        throw InvalidInput("FCNN training needs every sample anchored");
    return train(std::move(model), data, LossConfig::for_regime(Regime::supervised), sgd_cfg);
}

void export_embedding_csv(const std::filesystem::path &path, const Eigen::MatrixXd &points)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << "index";
    for (Eigen::Index r = 0; r < points.rows(); ++r)
        out << ",y_" << (r + 1);
    out << '\n' << std::setprecision(17);
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
        out << c;
        for (Eigen::Index r = 0; r < points.rows(); ++r)
            out << ',' << points(r, c);
        out << '\n';
    }
}

} // namespace csichart
