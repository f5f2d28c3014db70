#include "plume_scout/envsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "json.hpp"

#include "plume_scout/errors.hpp"

namespace plume_scout {

EnvConfig make_env_config(const Scenario& scenario, int num_agents, std::optional<double> budget_override) {
    if (num_agents < 1) throw InvalidArgument("number of agents must be >= 1");
    const auto& ep = scenario.spec.episode;
    EnvConfig cfg;
    cfg.num_agents = num_agents;
    if (budget_override) {
        if (!(*budget_override >= 0.0)) throw InvalidArgument("budget must be >= 0");
        cfg.budgets.assign(static_cast<std::size_t>(num_agents), *budget_override);
    } else if (ep.budgets_m.size() == 1) {
        cfg.budgets.assign(static_cast<std::size_t>(num_agents), ep.budgets_m.front());
    } else if (ep.budgets_m.size() == static_cast<std::size_t>(num_agents)) {
        cfg.budgets = ep.budgets_m;
    } else {
        throw InvalidArgument("scenario lists " + std::to_string(ep.budgets_m.size()) + " budgets for " +
                              std::to_string(num_agents) + " agents");
    }
    const double max_budget = *std::max_element(cfg.budgets.begin(), cfg.budgets.end());
    cfg.max_steps = ep.max_steps.value_or(std::max(1, static_cast<int>(std::ceil(max_budget / scenario.spec.grid.spacing))));
    cfg.sense_at_start = ep.sense_at_start;
    cfg.reward = scenario.spec.reward;
    return cfg;
}

double move_cost(const GridSpec& grid, std::size_t from, std::size_t to) {
    return cell_distance(grid, from, to);
}

double team_reward_da(const Field& prev, const Field& next, int sign) {
    if (!(prev.grid == next.grid)) throw InvalidArgument("team_reward_da: grid mismatch");
    return static_cast<double>(sign) * (prev.values - next.values).mean();
}

double team_reward_gt(const Field& truth, const Field& analysis, const Field& background) {
    const double base = mae(truth, background);
    if (!(base > 0.0)) throw InvalidScenario("background equals the truth; ground-truth reward is undefined");
    return 1.0 - mae(truth, analysis) / base;
}

Environment::Environment(std::shared_ptr<const Scenario> scenario, EnvConfig config)
    : scenario_(std::move(scenario)), config_(std::move(config)) {
    if (!scenario_) throw InvalidArgument("environment requires a scenario");
    if (config_.num_agents < 1) throw InvalidArgument("number of agents must be >= 1");
    if (config_.budgets.size() != static_cast<std::size_t>(config_.num_agents)) {
        throw InvalidArgument("one budget per agent is required");
    }
    if (config_.max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
    if (config_.reward.mode == RewardMode::gt && !(mae(scenario_->truth, scenario_->background) > 0.0)) {
        throw InvalidScenario("background equals the truth; ground-truth reward is undefined");
    }
}

Field Environment::assimilate(std::span<const Observation> obs) const {
    return blue_analysis(scenario_->background, scenario_->da_cov, obs, scenario_->spec.covariance.v0);
}

double Environment::reward_between(const Field& reference, const Field& analysis) const {
    if (config_.reward.mode == RewardMode::da) return team_reward_da(reference, analysis, config_.reward.sign);
    return team_reward_gt(scenario_->truth, analysis, scenario_->background);
}

ActionMask Environment::feasible_actions(const EnvState& state, int agent) const {
    if (agent < 0 || agent >= num_agents()) throw InvalidArgument("agent index out of range");
    const std::size_t n = num_cells();
    ActionMask mask(n, false);
    const DroneState& d = state.drones[static_cast<std::size_t>(agent)];
    if (!d.active) return mask;
    const GridSpec& grid = scenario_->spec.grid;
    for (std::size_t j = 0; j < n; ++j) {
        mask[j] = j != d.cell && move_cost(grid, d.cell, j) <= d.budget;
    }
    return mask;
}

void Environment::land_stranded(EnvState& state) const {
    for (int i = 0; i < num_agents(); ++i) {
        auto& d = state.drones[static_cast<std::size_t>(i)];
        if (!d.active) continue;
        const ActionMask mask = feasible_actions(state, i);
        if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) d.active = false;
    }
}

EnvState Environment::reset(std::uint64_t seed) const {
    const std::size_t n = num_cells();
    const auto N = static_cast<std::size_t>(num_agents());
    if (N > n) {
        throw InvalidArgument("cannot place " + std::to_string(N) + " drones on distinct cells of a " +
                              std::to_string(n) + "-cell grid");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> cells(n);
    std::iota(cells.begin(), cells.end(), std::size_t{0});
    // Partial Fisher-Yates: the first N slots are a uniform draw of distinct cells.
    for (std::size_t i = 0; i < N; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(cells[i], cells[pick(rng)]);
    }

    EnvState state;
    state.drones.reserve(N);
    for (std::size_t i = 0; i < N; ++i) state.drones.push_back(DroneState{cells[i], config_.budgets[i], true});
    if (config_.sense_at_start) {
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t c = state.drones[i].cell;
            state.observations.push_back(
                Observation{c, scenario_->truth.values[static_cast<Eigen::Index>(c)], static_cast<int>(i), 0});
        }
    }
    state.analysis = assimilate(state.observations);
    state.reward_reference = scenario_->background;
    state.step = 0;
    land_stranded(state);
    state.done = std::none_of(state.drones.begin(), state.drones.end(), [](const DroneState& d) { return d.active; });
    return state;
}

std::pair<EnvState, StepOutcome> Environment::step(const EnvState& state, std::span<const int> joint_action) const {
    const auto N = static_cast<std::size_t>(num_agents());
    if (state.done) throw ContractViolation("step called on a finished episode");
    if (joint_action.size() != N) {
        throw InvalidArgument("joint action has " + std::to_string(joint_action.size()) + " entries for " +
                              std::to_string(N) + " agents");
    }
    const GridSpec& grid = scenario_->spec.grid;
    const int t = state.step + 1;

    EnvState next = state;
    StepOutcome out;
    out.acted.assign(N, false);
    out.counterfactuals.assign(N, std::nullopt);
    out.per_agent_done.assign(N, false);

    for (std::size_t i = 0; i < N; ++i) {
        auto& d = next.drones[i];
        if (!d.active) continue;
        const ActionMask mask = feasible_actions(state, static_cast<int>(i));
        if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
            d.active = false;  // forced landing
            continue;
        }
        const int a = joint_action[i];
        if (a == kLand) {
            d.active = false;
            continue;
        }
        if (a < 0 || static_cast<std::size_t>(a) >= mask.size() || !mask[static_cast<std::size_t>(a)]) {
            throw ContractViolation("agent " + std::to_string(i) + " chose infeasible action " + std::to_string(a));
        }
        const auto target = static_cast<std::size_t>(a);
        d.budget = std::max(0.0, d.budget - move_cost(grid, d.cell, target));
        d.cell = target;
        out.acted[i] = true;
    }

    for (std::size_t i = 0; i < N; ++i) {
        if (!out.acted[i]) continue;
        const std::size_t c = next.drones[i].cell;
        next.observations.push_back(
            Observation{c, scenario_->truth.values[static_cast<Eigen::Index>(c)], static_cast<int>(i), t});
    }

    next.analysis = assimilate(next.observations);
    out.team_reward = reward_between(state.reward_reference, next.analysis);
    for (std::size_t i = 0; i < N; ++i) {
        if (!out.acted[i]) continue;
        const ObservationTag tag{static_cast<int>(i), t};
        const Field cf = analysis_with_exclusion(scenario_->background, scenario_->da_cov, next.observations,
                                                 scenario_->spec.covariance.v0, std::span(&tag, 1));
        out.counterfactuals[i] = reward_between(state.reward_reference, cf);
    }

    land_stranded(next);
    next.step = t;
    next.reward_reference = next.analysis;
    next.done = t >= config_.max_steps ||
                std::none_of(next.drones.begin(), next.drones.end(), [](const DroneState& d) { return d.active; });
    for (std::size_t i = 0; i < N; ++i) out.per_agent_done[i] = next.done || !next.drones[i].active;
    out.episode_done = next.done;
    out.mae_truth = mae(scenario_->truth, next.analysis);
    return {std::move(next), std::move(out)};
}

std::string trace_record(const EnvState& state, const StepOutcome& outcome) {
    nlohmann::json rec;
    rec["step"] = state.step;
    auto& drones = rec["drones"] = nlohmann::json::array();
    for (const auto& d : state.drones) {
        drones.push_back({{"cell", d.cell}, {"budget_m", d.budget}, {"active", d.active}});
    }
    rec["team_reward"] = outcome.team_reward;
    auto& cfs = rec["counterfactuals"] = nlohmann::json::array();
    for (const auto& c : outcome.counterfactuals) cfs.push_back(c ? nlohmann::json(*c) : nlohmann::json(nullptr));
    rec["acted"] = outcome.acted;
    rec["mae_truth"] = outcome.mae_truth;
    rec["observations"] = state.observations.size();
    rec["done"] = outcome.episode_done;
    return rec.dump();
}

}  // namespace plume_scout
