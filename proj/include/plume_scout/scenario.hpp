#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "plume_scout/assimilation.hpp"
#include "plume_scout/background.hpp"
#include "plume_scout/field.hpp"
#include "plume_scout/plume.hpp"

namespace plume_scout {

enum class RewardMode { da, gt };

struct RewardSpec {
    RewardMode mode = RewardMode::da;
    int sign = +1;  // +1 when simulations overestimate, -1 when they underestimate
};

struct EpisodeSpec {
    std::vector<double> budgets_m{2000.0};  // one entry = shared by every drone
    std::optional<int> max_steps;           // default ceil(max budget / spacing)
    bool sense_at_start = true;
};

struct CsvTruth {
    std::string path;
};

using TruthSource = std::variant<PlumeSpec, CsvTruth>;

/// Everything needed to materialize a scenario; this is what the scenario JSON holds.
struct ScenarioSpec {
    GridSpec grid{10, 10, 50.0};
    TruthSource truth = PlumeSpec{};
    CovarianceModel covariance;
    BackgroundSpec background;
    EpisodeSpec episode;
    RewardSpec reward;

    void validate() const;
};

/// A materialized scenario. Immutable once built; shared by environments.
struct Scenario {
    ScenarioSpec spec;
    Field truth;
    Field background;
    BackgroundCov da_cov;  // B used by assimilation, built from the background

    GridSpec grid() const { return spec.grid; }
};

/// Resolves the truth (plume or CSV relative to base_dir), draws the background
/// and builds the assimilation covariance.
Scenario build_scenario(const ScenarioSpec& spec, const std::string& base_dir = ".");

/// 10x10 grid at 50 m with a three-source plume peaking at 300 ppm (std ~34 ppm).
/// The background overestimates the truth threefold before noise. With a mild
/// bias the +1 DA reward keeps paying for corrections that undershoot the truth.
ScenarioSpec paperlike_preset();

}  // namespace plume_scout
