#include "csichart/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "csichart/errors.hpp"

namespace csichart {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double min_distance = 1e-9;

Eigen::Vector3d lift(const Position &p, double height) { return {p.x(), p.y(), height}; }

// Adds one propagation path arriving at the BS from `arrival_dir` (unit vector
// from BS toward the last interaction point) with total length `path_length`.
void add_path(Eigen::MatrixXcd &h,
              const SceneConfig &cfg,
              std::complex<double> amplitude,
              const Eigen::Vector3d &arrival_dir,
              double path_length)
{
    // Array axis is x; the direction cosine along it is sin of the angle off broadside.
    const double sin_theta = arrival_dir.x();
    const double tau = path_length / speed_of_light;
    Eigen::VectorXcd steer(cfg.num_antennas);
    for (int b = 0; b < cfg.num_antennas; ++b)
        steer(b) = amplitude * std::polar(1.0, -two_pi * cfg.antenna_spacing * b * sin_theta);
    for (int k = 0; k < cfg.num_subcarriers; ++k)
        h.col(k) += steer * std::polar(1.0, -two_pi * cfg.subcarrier_freq(k) * tau);
}

} // namespace

double SceneConfig::subcarrier_freq(int k) const
{
    return carrier_freq - 0.5 * bandwidth + k * bandwidth / num_subcarriers;
}

void SceneConfig::validate() const
{
    if (num_antennas < 1 || num_subcarriers < 1)
        throw InvalidConfig("scene needs at least one antenna and one subcarrier");
    if (!(area.width > 0.0) || !(area.height > 0.0))
        throw InvalidConfig("scene area is degenerate");
    if (!(bandwidth > 0.0) || !(carrier_freq > bandwidth))
        throw InvalidConfig("require carrier_freq > bandwidth > 0");
    if (!(antenna_spacing > 0.0))
        throw InvalidConfig("antenna_spacing must be positive");
    if (num_scatterers < 0)
        throw InvalidConfig("num_scatterers must be nonnegative");
    if (!los && num_scatterers == 0)
        throw InvalidConfig("NLoS scene without scatterers has an all-zero channel");
    if (scatterer_margin < 0.0 || !(scatter_amplitude >= 0.0))
        throw InvalidConfig("scatterer_margin and scatter_amplitude must be nonnegative");
    if (!los && scatter_amplitude == 0.0)
        throw InvalidConfig("NLoS scene with zero scatter amplitude has an all-zero channel");
    if (std::isnan(snr_db))
        throw InvalidConfig("snr_db is NaN");
}

Scene make_scene(const SceneConfig &cfg)
{
    cfg.validate();
    Scene scene{cfg, {}};
    Rng rng(cfg.seed);
    const double x0 = cfg.area.x_min - cfg.scatterer_margin;
    const double x1 = cfg.area.x_max() + cfg.scatterer_margin;
    const double y0 = cfg.area.y_min - cfg.scatterer_margin;
    const double y1 = cfg.area.y_max() + cfg.scatterer_margin;
    const double z1 = 2.0 * cfg.bs_position.z();
    // Rayleigh magnitude with unit mean: sigma = sqrt(2/pi).
    const double sigma = std::sqrt(2.0 / std::numbers::pi);
    for (int i = 0; i < cfg.num_scatterers; ++i) {
        const double x = rng.uniform(x0, x1);
        const double y = rng.uniform(y0, y1);
        const double z = rng.uniform(0.0, z1);
        scene.scatterers.positions.emplace_back(x, y, z);
        const double re = rng.normal();
        const double im = rng.normal();
        scene.scatterers.gains.emplace_back(sigma * re, sigma * im);
    }
    return scene;
}

CsiMatrix synth_csi(const Scene &scene, const Position &ue)
{
    const auto &cfg = scene.config;
    const Eigen::Vector3d ue3 = lift(ue, cfg.ue_height);
    const Eigen::Vector3d &bs = cfg.bs_position;
    const double lambda = cfg.wavelength();
    const double tx_amplitude = std::sqrt(std::pow(10.0, (cfg.tx_power_dbm - 30.0) / 10.0));

    CsiMatrix csi;
    csi.entries = Eigen::MatrixXcd::Zero(cfg.num_antennas, cfg.num_subcarriers);
    csi.ue_position = ue;

    const double d_direct = (ue3 - bs).norm();
    if (d_direct < min_distance)
        throw DegenerateInput("UE coincides with the base station");

    if (cfg.los) {
        const double amp = tx_amplitude * lambda / (4.0 * std::numbers::pi * d_direct);
        add_path(csi.entries, cfg, amp, (ue3 - bs) / d_direct, d_direct);
    }

    const auto &sc = scene.scatterers;
    for (std::size_t i = 0; i < sc.positions.size(); ++i) {
        const Eigen::Vector3d &s = sc.positions[i];
        const double d_bs = (s - bs).norm();
        const double d_ue = (ue3 - s).norm();
        if (d_bs < min_distance || d_ue < min_distance)
            throw DegenerateInput("scatterer coincides with the UE or base station");
        const double d_path = d_bs + d_ue;
        const std::complex<double> amp =
            tx_amplitude * cfg.scatter_amplitude * lambda / (4.0 * std::numbers::pi * d_path) * sc.gains[i];
        add_path(csi.entries, cfg, amp, (s - bs) / d_bs, d_path);
    }
    return csi;
}

CsiMatrix synth_csi(const Scene &scene, const Position &ue, Rng &noise_rng)
{
    CsiMatrix csi = synth_csi(scene, ue);
    const double snr_db = scene.config.snr_db;
    if (std::isinf(snr_db) && snr_db > 0.0)
        return csi;
    const double signal_power = csi.entries.squaredNorm() / static_cast<double>(csi.entries.size());
    const double noise_power = signal_power / std::pow(10.0, snr_db / 10.0);
    const double scale = std::sqrt(noise_power / 2.0);
    for (Eigen::Index k = 0; k < csi.entries.cols(); ++k)
        for (Eigen::Index b = 0; b < csi.entries.rows(); ++b) {
            const double re = noise_rng.normal();
            const double im = noise_rng.normal();
            csi.entries(b, k) += std::complex<double>(scale * re, scale * im);
        }
    return csi;
}

std::vector<Position> place_uniform(const SceneConfig &cfg, int n, std::uint64_t seed)
{
    if (n < 1)
        throw InvalidConfig("need at least one UE");
    Rng rng(seed);
    std::vector<Position> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = rng.uniform(cfg.area.x_min, cfg.area.x_max());
        const double y = rng.uniform(cfg.area.y_min, cfg.area.y_max());
        out.emplace_back(x, y);
    }
    return out;
}

std::vector<Position> place_square_ring(const SceneConfig &cfg, int n)
{
    if (n < 4)
        throw InvalidConfig("square ring needs at least four points");
    const double side = 0.5 * std::min(cfg.area.width, cfg.area.height);
    const Position c = cfg.area.center();
    const Position corner0 = c - Position(0.5 * side, 0.5 * side);
    const Position dirs[4] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
    const double perimeter = 4.0 * side;
    std::vector<Position> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double s = perimeter * i / n;
        // Integer side index so corners land exactly.
        const int side_idx = std::min(3, static_cast<int>(std::floor(4.0 * i / n)));
        const double along = s - side_idx * side;
        Position p = corner0;
        for (int j = 0; j < side_idx; ++j)
            p += side * dirs[j];
        p += along * dirs[side_idx];
        out.push_back(p);
    }
    return out;
}

} // namespace csichart
