#include <doctest.h>

#include <cmath>
#include <numbers>

#include "csichart/channel.hpp"
#include "csichart/errors.hpp"

using namespace csichart;

namespace {

SceneConfig los_only()
{
    SceneConfig cfg;
    cfg.num_scatterers = 0;
    cfg.los = true;
    return cfg;
}

} // namespace

TEST_CASE("make_scene")
{
    SUBCASE("pure line of sight is valid")
    {
        const auto scene = make_scene(los_only());
        CHECK(scene.scatterers.positions.empty());
    }
    SUBCASE("no scatterers and no direct path is rejected")
    {
        auto cfg = los_only();
        cfg.los = false;
        CHECK_THROWS_AS(make_scene(cfg), InvalidConfig);
    }
    SUBCASE("deterministic per seed")
    {
        SceneConfig cfg;
        cfg.seed = 42;
        const auto a = make_scene(cfg);
        const auto b = make_scene(cfg);
        CHECK(a.scatterers.positions == b.scatterers.positions);
        CHECK(a.scatterers.gains == b.scatterers.gains);
        cfg.seed = 43;
        CHECK(make_scene(cfg).scatterers.positions != a.scatterers.positions);
    }
    SUBCASE("scatterers lie in the grown box and below twice the BS height")
    {
        SceneConfig cfg;
        const auto scene = make_scene(cfg);
        REQUIRE(scene.scatterers.positions.size() == 200);
        for (const auto &s : scene.scatterers.positions) {
            CHECK(cfg.area.contains(s.head<2>(), cfg.scatterer_margin));
            CHECK(s.z() >= 0.0);
            CHECK(s.z() <= 2.0 * cfg.bs_position.z());
        }
    }
    SUBCASE("gains have roughly unit mean magnitude")
    {
        SceneConfig cfg;
        cfg.num_scatterers = 20000;
        const auto scene = make_scene(cfg);
        double sum = 0.0;
        for (const auto &g : scene.scatterers.gains)
            sum += std::abs(g);
        CHECK(sum / 20000.0 == doctest::Approx(1.0).epsilon(0.02));
    }
    SUBCASE("invalid configs")
    {
        SceneConfig cfg;
        cfg.num_antennas = 0;
        CHECK_THROWS_AS(make_scene(cfg), InvalidConfig);
        cfg = {};
        cfg.bandwidth = 3e9;
        CHECK_THROWS_AS(make_scene(cfg), InvalidConfig);
        cfg = {};
        cfg.area.width = 0.0;
        CHECK_THROWS_AS(make_scene(cfg), InvalidConfig);
    }
}

TEST_CASE("subcarrier frequencies span the band")
{
    SceneConfig cfg;
    CHECK(cfg.subcarrier_freq(0) == doctest::Approx(2.67e9));
    CHECK(cfg.subcarrier_freq(4) == doctest::Approx(2.68e9));
    CHECK(cfg.subcarrier_freq(7) - cfg.subcarrier_freq(6) == doctest::Approx(2.5e6));
}

TEST_CASE("synth_csi")
{
    SUBCASE("broadside UE gives equal phase across antennas")
    {
        // Arrival direction has zero component along the array axis (x).
        const auto scene = make_scene(los_only());
        const auto h = synth_csi(scene, Position(0.0, 80.0)).entries;
        for (Eigen::Index k = 0; k < h.cols(); ++k)
            for (Eigen::Index b = 1; b < h.rows(); ++b)
                CHECK(std::abs(h(b, k) - h(0, k)) < 1e-15);
    }
    SUBCASE("amplitude falls as one over distance")
    {
        auto cfg = los_only();
        cfg.num_subcarriers = 1;
        cfg.bs_position = {0.0, 0.0, 2.5};
        const auto scene = make_scene(cfg);
        const double a1 = std::abs(synth_csi(scene, Position(0.0, 40.0)).entries(0, 0));
        const double a2 = std::abs(synth_csi(scene, Position(0.0, 80.0)).entries(0, 0));
        CHECK(a1 / a2 == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("line-of-sight amplitude follows free-space loss")
    {
        const auto cfg = los_only();
        const auto scene = make_scene(cfg);
        const Position ue(30.0, 70.0);
        const double d = (Eigen::Vector3d(ue.x(), ue.y(), cfg.ue_height) - cfg.bs_position).norm();
        const double expected = std::sqrt(0.1) * cfg.wavelength() / (4.0 * std::numbers::pi * d);
        const auto h = synth_csi(scene, ue).entries;
        CHECK(h.cwiseAbs().minCoeff() == doctest::Approx(expected).epsilon(1e-12));
        CHECK(h.cwiseAbs().maxCoeff() == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("spatially consistent and deterministic")
    {
        SceneConfig cfg;
        const auto scene = make_scene(cfg);
        const auto a = synth_csi(scene, Position(12.0, 34.0));
        const auto b = synth_csi(scene, Position(12.0, 34.0));
        CHECK(a.entries == b.entries);
        REQUIRE(a.ue_position.has_value());
        CHECK(*a.ue_position == Position(12.0, 34.0));
        CHECK(a.entries.allFinite());
    }
    SUBCASE("line of sight is removed in NLoS scenes")
    {
        SceneConfig cfg;
        const auto with = make_scene(cfg);
        cfg.los = false;
        const auto without = make_scene(cfg);
        auto only_los = cfg;
        only_los.los = true;
        only_los.num_scatterers = 0;
        const Position ue(-20.0, 90.0);
        const Eigen::MatrixXcd diff = synth_csi(with, ue).entries - synth_csi(without, ue).entries;
        CHECK((diff - synth_csi(make_scene(only_los), ue).entries).norm() < 1e-12 * diff.norm());
    }
    SUBCASE("UE at the base station is singular")
    {
        auto cfg = los_only();
        cfg.bs_position = {5.0, 5.0, cfg.ue_height};
        CHECK_THROWS_AS(synth_csi(make_scene(cfg), Position(5.0, 5.0)), DegenerateInput);
    }
    SUBCASE("noise follows the configured SNR")
    {
        SceneConfig cfg;
        cfg.snr_db = 10.0;
        const auto scene = make_scene(cfg);
        const Position ue(40.0, 120.0);
        const auto clean = synth_csi(scene, ue).entries;
        double ratio = 0.0;
        Rng rng(3);
        for (int t = 0; t < 200; ++t)
            ratio += (synth_csi(scene, ue, rng).entries - clean).squaredNorm() / clean.squaredNorm();
        CHECK(ratio / 200.0 == doctest::Approx(0.1).epsilon(0.05));
    }
    SUBCASE("infinite SNR adds nothing")
    {
        SceneConfig cfg;
        const auto scene = make_scene(cfg);
        Rng rng(1);
        CHECK(synth_csi(scene, Position(1, 2), rng).entries == synth_csi(scene, Position(1, 2)).entries);
    }
}

TEST_CASE("line-of-sight channel is continuous in position")
{
    SceneConfig cfg;
    const auto scene = make_scene(cfg);
    const auto pts = place_uniform(cfg, 100, 77);
    Rng rng(8);
    // Phases rotate by 2*pi per wavelength (about 11 cm), so the relative
    // change only becomes linear in delta well below that.
    double prev = std::numeric_limits<double>::infinity();
    for (double delta : {1e-2, 1e-3, 1e-4}) {
        double mean = 0.0;
        for (const auto &p : pts) {
            const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const Position q = p + delta * Position(std::cos(phi), std::sin(phi));
            const auto h0 = synth_csi(scene, p).entries;
            mean += (h0 - synth_csi(scene, q).entries).norm() / h0.norm();
        }
        mean /= static_cast<double>(pts.size());
        CHECK(mean < prev / 5.0);
        prev = mean;
    }
    CHECK(prev < 0.01);
}

TEST_CASE("place_uniform")
{
    SceneConfig cfg;
    const auto pts = place_uniform(cfg, 2000, 5);
    REQUIRE(pts.size() == 2000);
    for (const auto &p : pts)
        CHECK(cfg.area.contains(p));
    CHECK(place_uniform(cfg, 1, 5).size() == 1);
    CHECK(cfg.area.contains(place_uniform(cfg, 1, 5)[0]));
    CHECK(place_uniform(cfg, 50, 9) == place_uniform(cfg, 50, 9));
    CHECK_THROWS_AS(place_uniform(cfg, 0, 1), InvalidConfig);
}

TEST_CASE("place_square_ring")
{
    SceneConfig cfg;
    SUBCASE("four points are the corners")
    {
        const auto pts = place_square_ring(cfg, 4);
        REQUIRE(pts.size() == 4);
        CHECK(pts[0] == Position(-50.0, 50.0));
        CHECK(pts[1] == Position(50.0, 50.0));
        CHECK(pts[2] == Position(50.0, 150.0));
        CHECK(pts[3] == Position(-50.0, 150.0));
    }
    SUBCASE("200 points, 50 per side, constant spacing")
    {
        const auto pts = place_square_ring(cfg, 200);
        REQUIRE(pts.size() == 200);
        int bottom = 0, right = 0, top = 0, left = 0;
        for (const auto &p : pts) {
            // Count each point once, on the side it starts.
            if (p.y() == 50.0 && p.x() < 50.0)
                ++bottom;
            else if (p.x() == 50.0 && p.y() < 150.0)
                ++right;
            else if (p.y() == 150.0 && p.x() > -50.0)
                ++top;
            else if (p.x() == -50.0 && p.y() > 50.0)
                ++left;
        }
        CHECK(bottom == 50);
        CHECK(right == 50);
        CHECK(top == 50);
        CHECK(left == 50);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto &a = pts[i];
            const auto &b = pts[(i + 1) % pts.size()];
            CHECK((a - b).lpNorm<1>() == doctest::Approx(2.0).epsilon(1e-12));
        }
    }
    SUBCASE("fewer than four points is rejected")
    {
        CHECK_THROWS_AS(place_square_ring(cfg, 3), InvalidConfig);
    }
}

TEST_CASE("T-intersection traces")
{
    SceneConfig cfg;
    const auto layout = t_intersection_layout(cfg);

    SUBCASE("twenty traces stay on the roads")
    {
        const auto traces = gen_t_intersection_traces(cfg, 20, 10.0, 0.2, 1);
        REQUIRE(traces.size() == 20);
        for (const auto &t : traces) {
            REQUIRE(t.samples.size() > 10);
            for (const auto &s : t.samples) {
                CHECK(layout.distance_to_centerline(s.position) <= layout.road_half_width);
                CHECK(cfg.area.contains(s.position, 1e-9));
            }
        }
    }
    SUBCASE("unit steps are exactly one meter apart")
    {
        TraceOptions opts;
        opts.lateral_jitter = 0.0;
        for (const auto &t : gen_t_intersection_traces(cfg, 10, 5.0, 0.2, 2, opts))
            for (std::size_t i = 1; i < t.samples.size(); ++i) {
                CHECK((t.samples[i].position - t.samples[i - 1].position).norm() == doctest::Approx(1.0).epsilon(1e-9));
                CHECK(t.samples[i].time > t.samples[i - 1].time);
            }
    }
    SUBCASE("jitter keeps the spacing and the speed bound")
    {
        for (const auto &t : gen_t_intersection_traces(cfg, 10, 10.0, 0.1, 3))
            for (std::size_t i = 1; i < t.samples.size(); ++i)
                CHECK((t.samples[i].position - t.samples[i - 1].position).norm() <= 1.0 + 1e-9);
    }
    SUBCASE("deterministic per seed")
    {
        const auto a = gen_t_intersection_traces(cfg, 5, 10.0, 0.2, 9);
        const auto b = gen_t_intersection_traces(cfg, 5, 10.0, 0.2, 9);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            REQUIRE(a[i].samples.size() == b[i].samples.size());
            for (std::size_t j = 0; j < a[i].samples.size(); ++j) {
                CHECK(a[i].samples[j].time == b[i].samples[j].time);
                CHECK(a[i].samples[j].position == b[i].samples[j].position);
            }
        }
    }
    SUBCASE("all three arms are used")
    {
        int west = 0, east = 0, south = 0;
        for (const auto &t : gen_t_intersection_traces(cfg, 60, 10.0, 0.2, 4)) {
            const Position start = t.samples.front().position;
            if ((start - layout.west_end).norm() < 10.0)
                ++west;
            else if ((start - layout.east_end).norm() < 10.0)
                ++east;
            else if ((start - layout.south_end).norm() < 10.0)
                ++south;
        }
        CHECK(west > 0);
        CHECK(east > 0);
        CHECK(south > 0);
        CHECK(west + east + south == 60);
    }
    SUBCASE("invalid requests")
    {
        CHECK_THROWS_AS(gen_t_intersection_traces(cfg, 0, 10.0, 0.2, 1), InvalidConfig);
        CHECK_THROWS_AS(gen_t_intersection_traces(cfg, 1, 0.0, 0.2, 1), InvalidConfig);
    }
}
