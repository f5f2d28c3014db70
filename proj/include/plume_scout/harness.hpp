#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "plume_scout/agent/c51_agent.hpp"
#include "plume_scout/agent/encoding.hpp"
#include "plume_scout/credit.hpp"
#include "plume_scout/envsim.hpp"
#include "json.hpp"
#include "plume_scout/scenario.hpp"

namespace plume_scout::harness {

enum class Method { da_diff, da_equal, gt_diff, gt_equal, random };

/// CLI spelling: da-diff, da-equal, gt-diff, gt-equal, random.
std::string method_name(Method m);
/// Long name, e.g. DA-IQL-DiffRewards or Random-Navigation.
std::string method_label(Method m);
/// Throws InvalidArgument listing the valid names.
Method parse_method(const std::string& name);
RewardMode reward_mode_of(Method m);
CreditStrategy credit_strategy_of(Method m);

struct TrainingSchedule {
    std::uint64_t total_steps = 100000;
    std::uint64_t eval_period = 1000;
    int eval_episodes = 10;
    std::uint64_t warmup_steps = 1000;  // uniform-random feasible actions, no updates
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.2;  // of total_steps
    double eval_epsilon = 0.01;

    /// Exploration rate at a 1-based training step.
    double epsilon_at(std::uint64_t step) const;
};

struct RunConfig {
    ScenarioSpec scenario = paperlike_preset();
    std::string scenario_base_dir = ".";
    int num_agents = 2;
    std::optional<double> budget;  // overrides the scenario's budgets
    std::optional<double> alpha;   // overrides the scenario's alpha (redraws the background)
    Method method = Method::da_diff;
    std::optional<double> gamma_credit;  // default 1/N
    TrainingSchedule schedule;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    bool redraw_background_per_seed = false;
    int baseline_episodes = 200;  // per seed, random method only
    agent::C51Config c51;
    int workers = 1;

    void validate() const;
    double resolved_gamma_credit() const;
};

/// Per-episode metrics; never fed back to the agents.
struct EvalStats {
    std::vector<double> final_mae;      // MAE(truth, x^a) at episode end
    std::vector<double> step_mean_mae;  // MAE averaged over the episode's steps
    std::vector<double> team_return;    // sum of team rewards

    double final_mae_mean() const;
    double final_mae_std() const;
    double step_mean_mae_mean() const;
    double team_return_mean() const;
};

struct CheckpointStats {
    std::uint64_t step = 0;
    double final_mae_mean = 0.0;
    double final_mae_std = 0.0;
    double step_mean_mae = 0.0;
    double team_return_mean = 0.0;
};

struct SeedResult {
    std::uint64_t seed = 0;
    bool diverged = false;
    std::string failure;
    std::vector<CheckpointStats> curve;
    std::vector<agent::C51Agent> agents;
    std::uint64_t transitions = 0;
    std::uint64_t transitions_in_support = 0;  // normalized reward within [v_min, v_max]
    double wall_seconds = 0.0;
};

struct RunArtifacts {
    RunConfig config;
    std::vector<SeedResult> seeds;
    double wall_seconds = 0.0;

    bool any_diverged() const;
};

/// Scenario for one seed: applies the alpha override and, if requested, a
/// per-seed background redraw.
std::shared_ptr<const Scenario> materialize_scenario(const RunConfig& config, std::uint64_t seed);

/// Environment resets use even seeds during training and odd seeds during evaluation.
std::uint64_t training_episode_seed(std::uint64_t raw);
std::uint64_t evaluation_episode_seed(std::uint64_t base, int episode);

/// Greedy-ish (epsilon) rollouts with the given agents. Does not modify them.
/// If `trace` is set, every step is passed to it as a JSON-lines record.
EvalStats evaluate_policy(const std::vector<agent::C51Agent>& agents, const Environment& env,
                          const agent::StateEncoder& encoder, int episodes, std::uint64_t seed, double epsilon,
                          const std::function<void(const std::string&)>& trace = {});

/// Random navigation: each step, active drones draw distinct affordable cells.
EvalStats run_random_baseline(const Environment& env, int episodes, std::uint64_t seed,
                              const std::function<void(const std::string&)>& trace = {});

/// Trains one seed end to end. Divergence is reported in the result, not thrown.
SeedResult train_seed(const RunConfig& config, std::uint64_t seed);

/// Trains every seed (up to config.workers in parallel). When out_dir is set,
/// writes learning_curve.csv, checkpoints/seed_<s>/agent_<i>.ckpt and manifest.json.
RunArtifacts run_training(const RunConfig& config, const std::optional<std::filesystem::path>& out_dir = {});

/// Fully resolved run configuration, as recorded in manifests.
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& doc);

void write_learning_curve(const std::filesystem::path& path, const RunArtifacts& run);

struct SweepAxes {
    std::vector<double> alphas;
    std::vector<double> budgets;
    std::vector<int> agents;
    std::vector<Method> methods;
};

struct SweepCell {
    Method method = Method::da_diff;
    double alpha = 0.0;
    double budget = 0.0;
    int num_agents = 0;
    std::vector<double> seed_final_mae;  // one per successful seed
    double final_mae_mean = 0.0;
    double ci95_low = 0.0;
    double ci95_high = 0.0;
    std::vector<std::string> failures;
};

struct SweepResult {
    std::vector<SweepCell> cells;
};

/// Cartesian product over the non-empty axes (empty axis = base value). Writes
/// sweep_runs.csv, summary.csv and manifest.json into out_dir when given.
SweepResult sweep(const RunConfig& base, const SweepAxes& axes,
                  const std::optional<std::filesystem::path>& out_dir = {});

void write_summary(const std::filesystem::path& path, const SweepResult& result);

/// Runs fn(i) for i in [0, count) on up to `workers` threads.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

/// SHA-256 of a file as lowercase hex.
std::string file_sha256(const std::filesystem::path& path);

std::string software_version();

}  // namespace plume_scout::harness
