#pragma once

#include <json.hpp>

#include "csichart/channel.hpp"
#include "csichart/features.hpp"
#include "csichart/nn.hpp"

namespace csichart {

// JSON mappings for the configuration structs. Missing keys keep their
// defaults; an infinite snr_db is written as null.
void to_json(nlohmann::json &j, const Rect &r);
void from_json(const nlohmann::json &j, Rect &r);
void to_json(nlohmann::json &j, const SceneConfig &c);
void from_json(const nlohmann::json &j, SceneConfig &c);
void to_json(nlohmann::json &j, const SgdConfig &c);
void from_json(const nlohmann::json &j, SgdConfig &c);
void to_json(nlohmann::json &j, const FeaturePipeline &p);
void from_json(const nlohmann::json &j, FeaturePipeline &p);

} // namespace csichart
