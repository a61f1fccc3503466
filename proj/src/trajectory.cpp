#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "csichart/channel.hpp"
#include "csichart/errors.hpp"

namespace csichart {

namespace {

double point_segment_distance(const Position &p, const Position &a, const Position &b)
{
    const Position ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

Position left_normal(const Position &t) { return {-t.y(), t.x()}; }

struct PathPoint
{
    Position p;
    Position tangent;
};

// Dense centerline polyline from `start` through the junction to `end`,
// with a circular-arc corner of radius r when the heading changes by 90 deg.
std::vector<PathPoint> build_centerline(const Position &start, const Position &junction, const Position &end, double r)
{
    const Position u_in = (junction - start).normalized();
    const Position u_out = (end - junction).normalized();
    std::vector<PathPoint> pts;
    if ((u_in - u_out).norm() < 1e-12) {
        pts.push_back({start, u_in});
        pts.push_back({end, u_in});
        return pts;
    }
    const Position arc_start = junction - r * u_in;
    const Position arc_end = junction + r * u_out;
    const Position center = arc_start + r * u_out;
    pts.push_back({start, u_in});
    const Position r0 = arc_start - center;
    const Position r1 = arc_end - center;
    const double a0 = std::atan2(r0.y(), r0.x());
    double sweep = std::atan2(r1.y(), r1.x()) - a0;
    if (sweep > std::numbers::pi)
        sweep -= 2.0 * std::numbers::pi;
    if (sweep < -std::numbers::pi)
        sweep += 2.0 * std::numbers::pi;
    const double turn = sweep > 0.0 ? 1.0 : -1.0;
    constexpr int arc_steps = 256;
    for (int i = 0; i <= arc_steps; ++i) {
        const double a = a0 + sweep * i / arc_steps;
        const Position radial(std::cos(a), std::sin(a));
        // Tangent of a counterclockwise (turn > 0) arc is the left normal of the radial.
        pts.push_back({center + r * radial, turn * left_normal(radial)});
    }
    pts.push_back({end, u_out});
    return pts;
}

// Walks the polyline and emits points whose Euclidean spacing is exactly
// `step` (chord length), starting at the first vertex.
std::vector<Position> resample_by_chord(const std::vector<Position> &poly, double step)
{
    std::vector<Position> out;
    if (poly.empty())
        return out;
    Position cur = poly.front();
    out.push_back(cur);
    std::size_t seg = 0;
    double t_cur = 0.0;
    while (seg + 1 < poly.size()) {
        bool found = false;
        for (std::size_t s = seg; s + 1 < poly.size(); ++s) {
            const Position &a = poly[s];
            const Position &b = poly[s + 1];
            if ((b - cur).norm() < step)
                continue;
            // Solve |a + t(b-a) - cur| = step for the larger root in [t0, 1].
            const Position d = b - a;
            const Position f = a - cur;
            const double qa = d.squaredNorm();
            const double qb = 2.0 * f.dot(d);
            const double qc = f.squaredNorm() - step * step;
            const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
            const double t = (-qb + std::sqrt(disc)) / (2.0 * qa);
            const double t0 = s == seg ? t_cur : 0.0;
            if (t < t0)
                continue;
            cur = a + t * d;
            out.push_back(cur);
            seg = s;
            t_cur = t;
            found = true;
            break;
        }
        if (!found)
            break;
    }
    return out;
}

} // namespace

double TIntersection::distance_to_centerline(const Position &p) const
{
    return std::min({point_segment_distance(p, west_end, junction),
                     point_segment_distance(p, junction, east_end),
                     point_segment_distance(p, south_end, junction)});
}

TIntersection t_intersection_layout(const SceneConfig &cfg)
{
    TIntersection t;
    t.junction = cfg.area.center();
    t.west_end = {cfg.area.x_min, t.junction.y()};
    t.east_end = {cfg.area.x_max(), t.junction.y()};
    t.south_end = {t.junction.x(), cfg.area.y_min};
    return t;
}

std::vector<Trace> gen_t_intersection_traces(const SceneConfig &cfg,
                                             int num_traces,
                                             double speed,
                                             double dt,
                                             std::uint64_t seed,
                                             const TraceOptions &opts)
{
    if (num_traces < 1)
        throw InvalidConfig("need at least one trace");
    if (!(speed > 0.0) || !(dt > 0.0))
        throw InvalidConfig("speed and dt must be positive");
    if (opts.lateral_jitter < 0.0 || !(opts.turn_radius > 0.0))
        throw InvalidConfig("invalid trace options");

    TIntersection layout = t_intersection_layout(cfg);
    layout.turn_radius = opts.turn_radius;
    const std::array<Position, 3> arm_ends = {layout.west_end, layout.east_end, layout.south_end};
    const double step = speed * dt;

    Rng rng(seed);
    std::vector<Trace> traces;
    traces.reserve(static_cast<std::size_t>(num_traces));
    for (int i = 0; i < num_traces; ++i) {
        const auto entry = static_cast<std::size_t>(rng.below(3));
        auto exit = static_cast<std::size_t>(rng.below(2));
        if (exit >= entry)
            ++exit;
        const double offset = rng.uniform(-opts.lateral_jitter, opts.lateral_jitter);

        const auto centerline = build_centerline(arm_ends[entry], layout.junction, arm_ends[exit], opts.turn_radius);
        std::vector<Position> lane;
        lane.reserve(centerline.size());
        for (const auto &pt : centerline)
            lane.push_back(pt.p + offset * left_normal(pt.tangent));

        Trace trace;
        const auto pts = resample_by_chord(lane, step);
        for (std::size_t k = 0; k < pts.size(); ++k)
            trace.samples.push_back({static_cast<double>(k) * dt, pts[k]});
        traces.push_back(std::move(trace));
    }
    return traces;
}

} // namespace csichart
