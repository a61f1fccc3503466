#include "csichart/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "binary_io.hpp"
#include "csichart/config.hpp"
#include "csichart/errors.hpp"
#include "csichart/random.hpp"

namespace csichart {

std::size_t Dataset::anchor_count() const
{
    std::size_t n = 0;
    for (auto a : anchored)
        n += a ? 1 : 0;
    return n;
}

std::vector<std::size_t> Dataset::anchored_indices() const
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < anchored.size(); ++i)
        if (anchored[i])
            idx.push_back(i);
    return idx;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const
{
    Dataset out;
    out.scene = scene;
    out.pipeline_version = pipeline_version;
    out.has_positions = has_positions;
    const auto m = static_cast<Eigen::Index>(indices.size());
    out.features.resize(features.rows(), m);
    out.positions.resize(positions.rows(), has_positions ? m : 0);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto i = indices[static_cast<std::size_t>(k)];
        if (i >= size())
            throw InvalidInput("subset index out of range");
        out.features.col(k) = features.col(static_cast<Eigen::Index>(i));
        if (has_positions)
            out.positions.col(k) = positions.col(static_cast<Eigen::Index>(i));
        out.anchored.push_back(anchored[i]);
        out.trace_id.push_back(trace_id[i]);
    }
    return out;
}

void Dataset::validate() const
{
    const auto n = size();
    if (anchored.size() != n || trace_id.size() != n)
        throw ShapeError("dataset per-sample arrays have inconsistent lengths");
    if (has_positions && static_cast<std::size_t>(positions.cols()) != n)
        throw ShapeError("dataset positions do not cover every sample");
    if (!has_positions && anchor_count() > 0)
        throw ShapeError("anchored samples require positions");
    if (!features.allFinite())
        throw InvalidInput("dataset features contain non-finite values");
}

bool Dataset::operator==(const Dataset &o) const
{
    auto same = [](const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
        return a.rows() == b.rows() && a.cols() == b.cols() &&
               std::equal(a.data(), a.data() + a.size(), b.data(),
                          [](double u, double v) { return std::bit_cast<std::uint64_t>(u) == std::bit_cast<std::uint64_t>(v); });
    };
    return scene == o.scene && pipeline_version == o.pipeline_version && same(features, o.features) &&
           same(positions, o.positions) && has_positions == o.has_positions && anchored == o.anchored &&
           trace_id == o.trace_id;
}

std::vector<std::uint8_t> sample_anchor_mask(std::size_t n, double fraction, std::uint64_t seed)
{
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw InvalidConfig("anchor fraction must lie in [0, 1]");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    std::vector<std::uint8_t> mask(n, 0);
    for (std::size_t i = 0; i < k; ++i)
        mask[order[i]] = 1;
    return mask;
}

namespace {
constexpr std::string_view dataset_magic{"CSIDSET\0", 8};
constexpr std::uint64_t dataset_version = 1;
} // namespace

void save_dataset(const std::filesystem::path &path, const Dataset &data)
{
    data.validate();
    nlohmann::json header;
    header["scene"] = data.scene;
    header["feature_dim"] = data.feature_dim();
    header["position_dim"] = data.position_dim();
    header["num_samples"] = data.size();
    header["pipeline_version"] = data.pipeline_version;
    header["has_positions"] = data.has_positions;

    detail::BinaryWriter w(path);
    w.magic(dataset_magic);
    w.u64(dataset_version);
    w.string(header.dump());
    const auto d = static_cast<std::size_t>(data.features.rows());
    const auto dp = static_cast<std::size_t>(data.positions.rows());
    for (std::size_t n = 0; n < data.size(); ++n) {
        const auto col = static_cast<Eigen::Index>(n);
        w.f64s(data.features.col(col).data(), d);
        if (data.has_positions)
            w.f64s(data.positions.col(col).data(), dp);
        w.u64(data.anchored[n]);
        w.i64(data.trace_id[n]);
    }
    w.finish();
}

Dataset load_dataset(const std::filesystem::path &path)
{
    detail::BinaryReader r(path);
    r.expect_magic(dataset_magic);
    const auto version = r.u64();
    if (version != dataset_version)
        throw IoError("unsupported dataset version " + std::to_string(version));
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(r.string());
    } catch (const nlohmann::json::exception &e) {
        throw IoError(std::string("corrupt dataset header: ") + e.what());
    }

    Dataset data;
    data.scene = header.at("scene").get<SceneConfig>();
    data.pipeline_version = header.at("pipeline_version").get<std::string>();
    data.has_positions = header.at("has_positions").get<bool>();
    const auto d = header.at("feature_dim").get<Eigen::Index>();
    const auto dp = header.at("position_dim").get<Eigen::Index>();
    const auto n = header.at("num_samples").get<Eigen::Index>();
    data.features.resize(d, n);
    data.positions.resize(dp, data.has_positions ? n : 0);
    data.anchored.resize(static_cast<std::size_t>(n));
    data.trace_id.resize(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        r.f64s(data.features.col(k).data(), static_cast<std::size_t>(d));
        if (data.has_positions)
            r.f64s(data.positions.col(k).data(), static_cast<std::size_t>(dp));
        data.anchored[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(r.u64() != 0);
        data.trace_id[static_cast<std::size_t>(k)] = r.i64();
    }
    r.expect_end();
    data.validate();
    return data;
}

void export_dataset_csv(const std::filesystem::path &path, const Dataset &data)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << "index,trace_id,anchored";
    for (Eigen::Index p = 0; p < data.positions.rows(); ++p)
        out << ",pos_" << p;
    for (Eigen::Index f = 0; f < data.features.rows(); ++f)
        out << ",f" << f;
    out << '\n' << std::setprecision(17);
    for (std::size_t n = 0; n < data.size(); ++n) {
        const auto col = static_cast<Eigen::Index>(n);
        out << n << ',' << data.trace_id[n] << ',' << int(data.anchored[n]);
        for (Eigen::Index p = 0; p < data.positions.rows(); ++p) {
            out << ',';
            if (data.has_positions)
                out << data.positions(p, col);
        }
        for (Eigen::Index f = 0; f < data.features.rows(); ++f)
            out << ',' << data.features(f, col);
        out << '\n';
    }
}

} // namespace csichart
