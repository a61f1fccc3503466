#include "csichart/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "csichart/errors.hpp"

namespace csichart {

namespace {

void check_same_shape(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b, const char *what)
{
    if (a.cols() != b.cols())
        throw ShapeError(std::string(what) + ": point sets have different sizes");
}

double pair_distance(const Eigen::MatrixXd &p, Eigen::Index i, Eigen::Index j) { return (p.col(i) - p.col(j)).norm(); }

std::string format_value(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

double mde(const Eigen::MatrixXd &pred, const Eigen::MatrixXd &truth)
{
    check_same_shape(pred, truth, "mde");
    if (pred.rows() != truth.rows())
        throw ShapeError("mde: dimension mismatch");
    if (pred.cols() == 0)
        throw InvalidInput("mde: empty point set");
    double sum = 0.0;
    for (Eigen::Index t = 0; t < pred.cols(); ++t)
        sum += (pred.col(t) - truth.col(t)).norm();
    return sum / static_cast<double>(pred.cols());
}

double kruskal_stress(const Eigen::MatrixXd &ref, const Eigen::MatrixXd &emb)
{
    check_same_shape(ref, emb, "kruskal_stress");
    const Eigen::Index n = ref.cols();
    if (n < 2)
        throw InvalidInput("kruskal_stress needs at least two points");
    double s_dd = 0.0, s_dr = 0.0, s_rr = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double delta = pair_distance(ref, i, j);
            const double d = pair_distance(emb, i, j);
            s_rr += delta * delta;
            s_dr += delta * d;
            s_dd += d * d;
        }
    if (!(s_rr > 0.0))
        throw DegenerateInput("kruskal_stress: all reference points coincide");
    const double beta = s_dd > 0.0 ? s_dr / s_dd : 0.0;
    double num = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double r = pair_distance(ref, i, j) - beta * pair_distance(emb, i, j);
            num += r * r;
        }
    return std::sqrt(num / s_rr);
}

std::vector<int> neighbor_ranks(const Eigen::MatrixXd &points, Eigen::Index n)
{
    const Eigen::Index count = points.cols();
    std::vector<double> d2(static_cast<std::size_t>(count));
    for (Eigen::Index m = 0; m < count; ++m)
        d2[static_cast<std::size_t>(m)] = (points.col(m) - points.col(n)).squaredNorm();
    std::vector<Eigen::Index> order;
    order.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index m = 0; m < count; ++m)
        if (m != n)
            order.push_back(m);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double da = d2[static_cast<std::size_t>(a)];
        const double db = d2[static_cast<std::size_t>(b)];
        return da < db || (da == db && a < b);
    });
    std::vector<int> rank(static_cast<std::size_t>(count), 0);
    for (std::size_t r = 0; r < order.size(); ++r)
        rank[static_cast<std::size_t>(order[r])] = static_cast<int>(r) + 1;
    return rank;
}

bool valid_neighborhood_size(int k, std::size_t n)
{
    return k >= 1 && 3 * static_cast<long long>(k) < 2 * static_cast<long long>(n) - 1;
}

double trustworthiness(const Eigen::MatrixXd &ref, const Eigen::MatrixXd &emb, int k)
{
    check_same_shape(ref, emb, "trustworthiness");
    const auto n = static_cast<std::size_t>(ref.cols());
    if (!valid_neighborhood_size(k, n))
        throw InvalidConfig("neighborhood size K=" + std::to_string(k) + " invalid for N=" + std::to_string(n));
    long long penalty = 0;
    for (Eigen::Index i = 0; i < ref.cols(); ++i) {
        const auto ref_rank = neighbor_ranks(ref, i);
        const auto emb_rank = neighbor_ranks(emb, i);
        for (std::size_t m = 0; m < n; ++m) {
            if (static_cast<Eigen::Index>(m) == i)
                continue;
            // m is among the K emb-space neighbors but not the K ref-space ones.
            if (emb_rank[m] <= k && ref_rank[m] > k)
                penalty += ref_rank[m] - k;
        }
    }
    const double nn = static_cast<double>(n);
    const double norm = 2.0 / (nn * k * (2.0 * nn - 3.0 * k - 1.0));
    return 1.0 - norm * static_cast<double>(penalty);
}

double continuity(const Eigen::MatrixXd &ref, const Eigen::MatrixXd &emb, int k)
{
    return trustworthiness(emb, ref, k);
}

std::vector<std::pair<std::string, double>> MetricReport::rows() const
{
    std::vector<std::pair<std::string, double>> r;
    if (mde)
        r.emplace_back("MDE", *mde);
    r.emplace_back("KS", ks);
    for (int k : k_values)
        r.emplace_back("TW@" + std::to_string(k), tw.at(k));
    for (int k : k_values)
        r.emplace_back("CT@" + std::to_string(k), ct.at(k));
    return r;
}

std::string MetricReport::to_csv() const
{
    std::ostringstream os;
    os << "metric,value\n";
    for (const auto &[name, v] : rows())
        os << name << ',' << format_value(v) << '\n';
    return os.str();
}

std::string MetricReport::to_table() const
{
    std::ostringstream os;
    for (const auto &[name, v] : rows()) {
        std::string label = name;
        label.resize(std::max<std::size_t>(label.size(), 8), ' ');
        os << label << "  " << format_value(v) << '\n';
    }
    return os.str();
}

void MetricReport::write(const std::filesystem::path &csv_path, const std::filesystem::path &table_path) const
{
    std::ofstream csv(csv_path);
    std::ofstream table(table_path);
    if (!csv || !table)
        throw IoError("cannot write metric report to " + csv_path.parent_path().string());
    csv << to_csv();
    table << to_table();
}

MetricReport evaluate_points(const Eigen::MatrixXd &emb,
                             const Eigen::MatrixXd &ref,
                             const std::vector<int> &k_values,
                             bool include_mde)
{
    check_same_shape(ref, emb, "evaluate");
    MetricReport rep;
    rep.k_values = k_values;
    for (int k : k_values)
        if (!valid_neighborhood_size(k, static_cast<std::size_t>(ref.cols())))
            throw InvalidConfig("neighborhood size K=" + std::to_string(k) + " invalid for N=" +
                                std::to_string(ref.cols()));
    if (include_mde)
        rep.mde = mde(emb, ref);
    rep.ks = kruskal_stress(ref, emb);

    // One rank pass per point serves every K.
    const auto n = static_cast<std::size_t>(ref.cols());
    std::map<int, long long> tw_pen, ct_pen;
    for (Eigen::Index i = 0; i < ref.cols(); ++i) {
        const auto ref_rank = neighbor_ranks(ref, i);
        const auto emb_rank = neighbor_ranks(emb, i);
        for (int k : k_values) {
            long long &tp = tw_pen[k];
            long long &cp = ct_pen[k];
            for (std::size_t m = 0; m < n; ++m) {
                if (static_cast<Eigen::Index>(m) == i)
                    continue;
                if (emb_rank[m] <= k && ref_rank[m] > k)
                    tp += ref_rank[m] - k;
                if (ref_rank[m] <= k && emb_rank[m] > k)
                    cp += emb_rank[m] - k;
            }
        }
    }
    const double nn = static_cast<double>(n);
    for (int k : k_values) {
        const double norm = 2.0 / (nn * k * (2.0 * nn - 3.0 * k - 1.0));
        rep.tw[k] = 1.0 - norm * static_cast<double>(tw_pen[k]);
        rep.ct[k] = 1.0 - norm * static_cast<double>(ct_pen[k]);
    }
    return rep;
}

MetricReport evaluate(const Eigen::MatrixXd &points, const Dataset &data, const EvaluationOptions &opts)
{
    if (!data.has_positions)
        throw InvalidInput("evaluation needs ground-truth positions");
    if (static_cast<std::size_t>(points.cols()) != data.size())
        throw ShapeError("evaluation points do not match the dataset size");
    if (opts.reference == ReferenceSpace::positions)
        return evaluate_points(points, data.positions, opts.k_values, opts.include_mde);
    MetricReport rep = evaluate_points(points, data.features, opts.k_values, false);
    if (opts.include_mde)
        rep.mde = mde(points, data.positions);
    return rep;
}

MetricReport evaluate(const MlpModel &model, const Dataset &data, const EvaluationOptions &opts)
{
    return evaluate(predict(model, data.features), data, opts);
}

} // namespace csichart
