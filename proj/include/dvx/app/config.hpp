#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "dvx/distill/train.hpp"
#include "dvx/eval/runner.hpp"
#include "dvx/model/network.hpp"
#include "dvx/sim/scene.hpp"
#include "dvx/sim/sensor.hpp"

namespace dvx::app {

/// Every tunable of a run. Angles are radians, lengths meters.
struct RunConfig {
    std::uint64_t seed = 42;
    int threads = 1;
    sim::SceneSpec scene{};
    sim::SensorModel vehicle_sensor = sim::default_vehicle_sensor();
    sim::SensorModel infra_sensor = sim::default_infra_sensor();
    model::ModelConfig model{};
    distill::TrainConfig train{};
    eval::EvalConfig eval{};

    void validate() const;
};

/// Full document with every key present.
nlohmann::ordered_json to_json(const RunConfig& cfg);

/// Overlays `doc` on the defaults. Keys absent from the default document are rejected with the
/// offending path; so are type mismatches. The result is validated.
RunConfig from_json(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Applies "a.b.c=value" where value is JSON (bare words are taken as strings).
void apply_override(nlohmann::ordered_json& doc, const std::string& assignment);

/// Writes effective_config.json into `dir`.
void echo_config(const std::filesystem::path& dir, const RunConfig& cfg);

}  // namespace dvx::app
