#pragma once

#include <filesystem>

#include "json.hpp"
#include "plume_scout/scenario.hpp"

namespace plume_scout {

/// Scenario JSON. Sections: grid, truth, covariance, background, episode,
/// reward. Unknown keys are rejected. Lengths are in meters (spacing_m,
/// delta_per_m), v0 and jitter in ppm^2.
nlohmann::json scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const nlohmann::json& doc);

ScenarioSpec load_scenario_file(const std::filesystem::path& path);
void save_scenario_file(const std::filesystem::path& path, const ScenarioSpec& spec);

}  // namespace plume_scout
