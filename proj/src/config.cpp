#include "csichart/config.hpp"

#include <cmath>
#include <limits>

namespace csichart {

namespace {

template <typename T>
void read_opt(const nlohmann::json &j, const char *key, T &dst)
{
    if (auto it = j.find(key); it != j.end() && !it->is_null())
        it->get_to(dst);
}

} // namespace

void to_json(nlohmann::json &j, const Rect &r)
{
    j = {{"x_min", r.x_min}, {"y_min", r.y_min}, {"width", r.width}, {"height", r.height}};
}

void from_json(const nlohmann::json &j, Rect &r)
{
    read_opt(j, "x_min", r.x_min);
    read_opt(j, "y_min", r.y_min);
    read_opt(j, "width", r.width);
    read_opt(j, "height", r.height);
}

void to_json(nlohmann::json &j, const SceneConfig &c)
{
    j = {{"bs_position", {c.bs_position.x(), c.bs_position.y(), c.bs_position.z()}},
         {"ue_height", c.ue_height},
         {"num_antennas", c.num_antennas},
         {"num_subcarriers", c.num_subcarriers},
         {"carrier_freq", c.carrier_freq},
         {"bandwidth", c.bandwidth},
         {"antenna_spacing", c.antenna_spacing},
         {"tx_power_dbm", c.tx_power_dbm},
         {"num_scatterers", c.num_scatterers},
         {"los", c.los},
         {"area", c.area},
         {"seed", c.seed},
         {"scatterer_margin", c.scatterer_margin},
         {"scatter_amplitude", c.scatter_amplitude}};
    if (std::isinf(c.snr_db))
        j["snr_db"] = nullptr;
    else
        j["snr_db"] = c.snr_db;
}

void from_json(const nlohmann::json &j, SceneConfig &c)
{
    if (auto it = j.find("bs_position"); it != j.end()) {
        const auto v = it->get<std::vector<double>>();
        if (v.size() != 3)
            throw nlohmann::json::type_error::create(302, "bs_position needs three coordinates", &j);
        c.bs_position = {v[0], v[1], v[2]};
    }
    read_opt(j, "ue_height", c.ue_height);
    read_opt(j, "num_antennas", c.num_antennas);
    read_opt(j, "num_subcarriers", c.num_subcarriers);
    read_opt(j, "carrier_freq", c.carrier_freq);
    read_opt(j, "bandwidth", c.bandwidth);
    read_opt(j, "antenna_spacing", c.antenna_spacing);
    read_opt(j, "tx_power_dbm", c.tx_power_dbm);
    read_opt(j, "num_scatterers", c.num_scatterers);
    read_opt(j, "los", c.los);
    read_opt(j, "area", c.area);
    read_opt(j, "seed", c.seed);
    read_opt(j, "scatterer_margin", c.scatterer_margin);
    read_opt(j, "scatter_amplitude", c.scatter_amplitude);
    if (auto it = j.find("snr_db"); it != j.end())
        c.snr_db = it->is_null() ? std::numeric_limits<double>::infinity() : it->get<double>();
}

void to_json(nlohmann::json &j, const SgdConfig &c)
{
    j = {{"learning_rate", c.learning_rate},
         {"l2_lambda", c.l2_lambda},
         {"batch_size", c.batch_size},
         {"epochs", c.epochs},
         {"seed", c.seed},
         {"momentum", c.momentum}};
}

void from_json(const nlohmann::json &j, SgdConfig &c)
{
    read_opt(j, "learning_rate", c.learning_rate);
    read_opt(j, "l2_lambda", c.l2_lambda);
    read_opt(j, "batch_size", c.batch_size);
    read_opt(j, "epochs", c.epochs);
    read_opt(j, "seed", c.seed);
    read_opt(j, "momentum", c.momentum);
}

void to_json(nlohmann::json &j, const FeaturePipeline &p) { j = {{"sigma", p.sigma}}; }

void from_json(const nlohmann::json &j, FeaturePipeline &p) { read_opt(j, "sigma", p.sigma); }

} // namespace csichart
