#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "csichart/random.hpp"

namespace csichart {

// UE coordinate in meters on the horizontal plane (the UE height is a scene
// constant).
using Position = Eigen::Vector2d;

inline constexpr double speed_of_light = 299792458.0;

struct Rect
{
    double x_min = -100.0;
    double y_min = 0.0;
    double width = 200.0;
    double height = 200.0;

    double x_max() const { return x_min + width; }
    double y_max() const { return y_min + height; }
    Position center() const { return {x_min + 0.5 * width, y_min + 0.5 * height}; }
    bool contains(const Position &p, double tol = 0.0) const
    {
        return p.x() >= x_min - tol && p.x() <= x_max() + tol && p.y() >= y_min - tol && p.y() <= y_max() + tol;
    }
    bool operator==(const Rect &) const = default;
};

struct SceneConfig
{
    Eigen::Vector3d bs_position{0.0, 0.0, 30.0};
    double ue_height = 2.5;
    int num_antennas = 32;
    int num_subcarriers = 8;
    double carrier_freq = 2.68e9;
    double bandwidth = 20e6;
    double antenna_spacing = 0.5; // in wavelengths
    double tx_power_dbm = 20.0;
    int num_scatterers = 200;
    bool los = true;
    Rect area;
    std::uint64_t seed = 0;
    // Scatterers are drawn from the area grown by this margin on every side.
    double scatterer_margin = 100.0;
    // Reflection loss applied to every scattered path on top of its Rayleigh
    // gain. With 0.1 the 200 default scatterers carry roughly as much power
    // as the direct path (Rician K near 0 dB); at 1 they swamp it by 20 dB.
    double scatter_amplitude = 0.1;
    // Per-entry SNR of the additive noise; +inf disables noise.
    double snr_db = std::numeric_limits<double>::infinity();

    double wavelength() const { return speed_of_light / carrier_freq; }
    double subcarrier_freq(int k) const;
    void validate() const;

    bool operator==(const SceneConfig &) const = default;
};

struct ScattererMap
{
    std::vector<Eigen::Vector3d> positions;
    std::vector<std::complex<double>> gains;
};

struct Scene
{
    SceneConfig config;
    ScattererMap scatterers;
};

struct CsiMatrix
{
    Eigen::MatrixXcd entries; // antennas x subcarriers
    std::optional<Position> ue_position;
};

struct TraceSample
{
    double time = 0.0;
    Position position = Position::Zero();
};

struct Trace
{
    std::vector<TraceSample> samples;
};

Scene make_scene(const SceneConfig &cfg);

// Noiseless channel. Throws DegenerateInput if the UE coincides with the BS
// or with a scatterer.
CsiMatrix synth_csi(const Scene &scene, const Position &ue);

// Adds complex Gaussian noise at the scene's snr_db (no-op when infinite).
CsiMatrix synth_csi(const Scene &scene, const Position &ue, Rng &noise_rng);

std::vector<Position> place_uniform(const SceneConfig &cfg, int n, std::uint64_t seed);

// n points evenly spaced (by arc length) around a centered square whose side
// is half the smaller area side; starts at the lower-left corner and walks
// counterclockwise.
std::vector<Position> place_square_ring(const SceneConfig &cfg, int n);

// Three-armed road layout inside the scene area: a through road along the
// horizontal midline and a side road from the junction down to the lower edge.
struct TIntersection
{
    Position junction;
    Position west_end;
    Position east_end;
    Position south_end;
    double turn_radius = 12.0;
    double road_half_width = 7.5;

    double distance_to_centerline(const Position &p) const;
};

TIntersection t_intersection_layout(const SceneConfig &cfg);

struct TraceOptions
{
    double lateral_jitter = 1.5; // max per-trace lane offset in meters
    double turn_radius = 12.0;
};

std::vector<Trace> gen_t_intersection_traces(const SceneConfig &cfg,
                                             int num_traces,
                                             double speed,
                                             double dt,
                                             std::uint64_t seed,
                                             const TraceOptions &opts = {});

} // namespace csichart
