#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <string>

#include "plume_scout/assimilation.hpp"
#include "plume_scout/field.hpp"
#include "plume_scout/scenario.hpp"

namespace plume_scout {

using ActionMask = std::vector<bool>;

/// Joint-action entry for agents that are already inactive or force-landed.
inline constexpr int kNoAction = -1;
/// Explicit landing request from an agent that could still move.
inline constexpr int kLand = -2;

struct DroneState {
    std::size_t cell = 0;
    double budget = 0.0;  // meters left
    bool active = true;

    friend bool operator==(const DroneState&, const DroneState&) = default;
};

struct EnvConfig {
    int num_agents = 1;
    std::vector<double> budgets;  // one per agent
    int max_steps = 1;
    bool sense_at_start = true;
    RewardSpec reward;
};

/// Resolves per-agent budgets and max_steps from the scenario's episode section.
/// `budget_override` replaces every drone's budget when given.
EnvConfig make_env_config(const Scenario& scenario, int num_agents, std::optional<double> budget_override = {});

struct EnvState {
    std::vector<DroneState> drones;
    Field analysis;            // x^a_t
    Field reward_reference;    // analysis the next team reward is measured against
    ObservationSet observations;
    int step = 0;
    bool done = false;
};

struct StepOutcome {
    double team_reward = 0.0;
    /// r(s_t, a without agent i); empty for agents that did not sense this step.
    std::vector<std::optional<double>> counterfactuals;
    std::vector<bool> acted;           // agents that moved and sensed this step
    std::vector<bool> per_agent_done;  // agent will take no further action
    bool episode_done = false;
    double mae_truth = 0.0;            // diagnostic only
};

/// Euclidean move cost in meters (proportionality constant 1).
double move_cost(const GridSpec& grid, std::size_t from, std::size_t to);

/// sign * mean(prev - next)
double team_reward_da(const Field& prev, const Field& next, int sign);

/// 1 - MAE(truth, analysis) / MAE(truth, background)
double team_reward_gt(const Field& truth, const Field& analysis, const Field& background);

/// The multi-drone sensing game. The environment itself is immutable; all
/// episode state lives in EnvState values, so reset/step are pure functions.
class Environment {
public:
    Environment(std::shared_ptr<const Scenario> scenario, EnvConfig config);

    const Scenario& scenario() const noexcept { return *scenario_; }
    const EnvConfig& config() const noexcept { return config_; }
    int num_agents() const noexcept { return config_.num_agents; }
    std::size_t num_cells() const noexcept { return scenario_->spec.grid.size(); }

    EnvState reset(std::uint64_t seed) const;

    /// Cells agent may move to: active, not its current cell, affordable.
    ActionMask feasible_actions(const EnvState& state, int agent) const;

    std::pair<EnvState, StepOutcome> step(const EnvState& state, std::span<const int> joint_action) const;

private:
    double reward_between(const Field& reference, const Field& analysis) const;
    void land_stranded(EnvState& state) const;
    Field assimilate(std::span<const Observation> obs) const;

    std::shared_ptr<const Scenario> scenario_;
    EnvConfig config_;
};

/// One JSON-lines trace record (no trailing newline) for a completed step.
std::string trace_record(const EnvState& state, const StepOutcome& outcome);

}  // namespace plume_scout
