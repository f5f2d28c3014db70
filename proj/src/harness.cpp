#include "plume_scout/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "json.hpp"
#include "plume_scout/errors.hpp"
#include "plume_scout/scenario_file.hpp"
#include "plume_scout/stats.hpp"

namespace plume_scout::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) { return splitmix64(splitmix64(seed) ^ stream); }

constexpr std::uint64_t kAgentStream = 0x100;
constexpr std::uint64_t kExploreStream = 0x200;
constexpr std::uint64_t kEpisodeStream = 0x300;
constexpr std::uint64_t kEvalStream = 0x400;
constexpr std::uint64_t kBackgroundStream = 0x500;

std::string fmt(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

bool any(const ActionMask& m) { return std::any_of(m.begin(), m.end(), [](bool b) { return b; }); }

struct EpisodeTally {
    double mae_sum = 0.0;
    int steps = 0;
    double team_return = 0.0;
};

void record_episode(EvalStats& stats, const EnvState& final_state, const Scenario& scenario, const EpisodeTally& t) {
    const double final_mae = mae(scenario.truth, final_state.analysis);
    stats.final_mae.push_back(final_mae);
    stats.step_mean_mae.push_back(t.steps > 0 ? t.mae_sum / t.steps : final_mae);
    stats.team_return.push_back(t.team_return);
}

}  // namespace

// ---------------------------------------------------------------------------

std::string method_name(Method m) {
    switch (m) {
        case Method::da_diff: return "da-diff";
        case Method::da_equal: return "da-equal";
        case Method::gt_diff: return "gt-diff";
        case Method::gt_equal: return "gt-equal";
        case Method::random: return "random";
    }
    return "?";
}

std::string method_label(Method m) {
    switch (m) {
        case Method::da_diff: return "DA-IQL-DiffRewards";
        case Method::da_equal: return "DA-IQL-EqualSplit";
        case Method::gt_diff: return "GT-IQL-DiffRewards";
        case Method::gt_equal: return "GT-IQL-EqualSplit";
        case Method::random: return "Random-Navigation";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::da_diff, Method::da_equal, Method::gt_diff, Method::gt_equal, Method::random}) {
        if (name == method_name(m)) return m;
    }
    throw InvalidArgument("unknown method '" + name + "' (valid: da-diff, da-equal, gt-diff, gt-equal, random)");
}

RewardMode reward_mode_of(Method m) {
    return (m == Method::gt_diff || m == Method::gt_equal) ? RewardMode::gt : RewardMode::da;
}

CreditStrategy credit_strategy_of(Method m) {
    switch (m) {
        case Method::da_diff: return CreditStrategy::diff_da;
        case Method::gt_diff: return CreditStrategy::diff_gt;
        default: return CreditStrategy::equal;
    }
}

double TrainingSchedule::epsilon_at(std::uint64_t step) const {
    if (step <= warmup_steps) return 1.0;
    const double decay_steps = epsilon_decay_fraction * static_cast<double>(total_steps);
    if (decay_steps <= 0.0) return epsilon_end;
    const double frac = std::min(1.0, static_cast<double>(step) / decay_steps);
    return epsilon_start + frac * (epsilon_end - epsilon_start);
}

void RunConfig::validate() const {
    scenario.validate();
    if (num_agents < 1) throw InvalidArgument("number of agents must be >= 1");
    if (budget && !(*budget >= 0.0)) throw InvalidArgument("budget must be >= 0");
    if (alpha && !(*alpha >= 0.0)) throw InvalidArgument("alpha must be >= 0");
    if (gamma_credit && !(*gamma_credit > 0.0)) throw InvalidArgument("gamma_credit must be > 0");
    if (schedule.eval_period == 0 || schedule.eval_episodes < 1) {
        throw InvalidArgument("eval period and eval episodes must be positive");
    }
    if (seeds.empty()) throw InvalidArgument("at least one seed is required");
    if (baseline_episodes < 1) throw InvalidArgument("baseline episodes must be positive");
    if (workers < 1) throw InvalidArgument("workers must be >= 1");
    c51.support.validate();
}

double RunConfig::resolved_gamma_credit() const { return gamma_credit.value_or(1.0 / num_agents); }

double EvalStats::final_mae_mean() const { return stats::mean(final_mae); }
double EvalStats::final_mae_std() const { return stats::population_std(final_mae); }
double EvalStats::step_mean_mae_mean() const { return stats::mean(step_mean_mae); }
double EvalStats::team_return_mean() const { return stats::mean(team_return); }

bool RunArtifacts::any_diverged() const {
    return std::any_of(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.diverged; });
}

std::shared_ptr<const Scenario> materialize_scenario(const RunConfig& config, std::uint64_t seed) {
    ScenarioSpec spec = config.scenario;
    if (config.alpha) spec.covariance.alpha = *config.alpha;
    if (config.redraw_background_per_seed) spec.background.seed = mix(seed, kBackgroundStream);
    return std::make_shared<const Scenario>(build_scenario(spec, config.scenario_base_dir));
}

std::uint64_t training_episode_seed(std::uint64_t raw) { return raw & ~std::uint64_t{1}; }

std::uint64_t evaluation_episode_seed(std::uint64_t base, int episode) {
    return mix(base, kEvalStream + static_cast<std::uint64_t>(episode)) | 1u;
}

// ---------------------------------------------------------------------------

EvalStats evaluate_policy(const std::vector<agent::C51Agent>& agents, const Environment& env,
                          const agent::StateEncoder& encoder, int episodes, std::uint64_t seed, double epsilon,
                          const std::function<void(const std::string&)>& trace) {
    if (agents.size() != static_cast<std::size_t>(env.num_agents())) {
        throw InvalidArgument("evaluate_policy: one agent per drone is required");
    }
    EvalStats stats;
    std::mt19937_64 rng(mix(seed, kExploreStream));
    for (int e = 0; e < episodes; ++e) {
        EnvState state = env.reset(evaluation_episode_seed(seed, e));
        EpisodeTally tally;
        while (!state.done) {
            const Eigen::VectorXd enc = encoder.encode(state);
            std::vector<int> joint(agents.size(), kNoAction);
            for (std::size_t i = 0; i < agents.size(); ++i) {
                const ActionMask mask = env.feasible_actions(state, static_cast<int>(i));
                if (any(mask)) joint[i] = agents[i].act(enc, mask, epsilon, rng);
            }
            auto [next, out] = env.step(state, joint);
            tally.mae_sum += out.mae_truth;
            tally.team_return += out.team_reward;
            ++tally.steps;
            if (trace) trace(trace_record(next, out));
            state = std::move(next);
        }
        record_episode(stats, state, env.scenario(), tally);
    }
    return stats;
}

EvalStats run_random_baseline(const Environment& env, int episodes, std::uint64_t seed,
                              const std::function<void(const std::string&)>& trace) {
    EvalStats stats;
    std::mt19937_64 rng(mix(seed, kExploreStream));
    const std::size_t n = env.num_cells();
    for (int e = 0; e < episodes; ++e) {
        EnvState state = env.reset(evaluation_episode_seed(seed, e));
        EpisodeTally tally;
        while (!state.done) {
            std::vector<int> joint(static_cast<std::size_t>(env.num_agents()), kNoAction);
            std::vector<bool> claimed(n, false);
            for (int i = 0; i < env.num_agents(); ++i) {
                const ActionMask mask = env.feasible_actions(state, i);
                if (!any(mask)) continue;
                std::vector<int> options;
                for (std::size_t j = 0; j < n; ++j) {
                    if (mask[j] && !claimed[j]) options.push_back(static_cast<int>(j));
                }
                if (options.empty()) {
                    joint[static_cast<std::size_t>(i)] = kLand;
                    continue;
                }
                std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
                const int a = options[pick(rng)];
                claimed[static_cast<std::size_t>(a)] = true;
                joint[static_cast<std::size_t>(i)] = a;
            }
            auto [next, out] = env.step(state, joint);
            tally.mae_sum += out.mae_truth;
            tally.team_return += out.team_reward;
            ++tally.steps;
            if (trace) trace(trace_record(next, out));
            state = std::move(next);
        }
        record_episode(stats, state, env.scenario(), tally);
    }
    return stats;
}

// ---------------------------------------------------------------------------

SeedResult train_seed(const RunConfig& config, std::uint64_t seed) {
    const auto started = std::chrono::steady_clock::now();
    SeedResult result;
    result.seed = seed;

    const auto scenario = materialize_scenario(config, seed);
    EnvConfig env_cfg = make_env_config(*scenario, config.num_agents, config.budget);
    env_cfg.reward.mode = reward_mode_of(config.method);
    const Environment env(scenario, env_cfg);
    const auto encoder = agent::StateEncoder::for_scenario(*scenario, config.num_agents);
    const double reward_scale = encoder.background_std();
    const CreditConfig credit{credit_strategy_of(config.method), config.resolved_gamma_credit()};
    const auto& support = config.c51.support;
    const auto N = static_cast<std::size_t>(config.num_agents);
    const auto n = static_cast<Eigen::Index>(env.num_cells());

    for (std::size_t i = 0; i < N; ++i) {
        result.agents.emplace_back(encoder.size(), n, config.c51, mix(seed, kAgentStream + i));
    }
    std::mt19937_64 explore(mix(seed, kExploreStream));
    std::mt19937_64 episodes(mix(seed, kEpisodeStream));
    const std::uint64_t eval_base = mix(seed, kEvalStream);

    EnvState state = env.reset(training_episode_seed(episodes()));
    Eigen::VectorXd enc = encoder.encode(state);
    double episode_return = 0.0;
    const auto& sched = config.schedule;

    try {
        for (std::uint64_t step = 1; step <= sched.total_steps; ++step) {
            const double eps = sched.epsilon_at(step);
            std::vector<int> joint(N, kNoAction);
            for (std::size_t i = 0; i < N; ++i) {
                const ActionMask mask = env.feasible_actions(state, static_cast<int>(i));
                if (any(mask)) joint[i] = result.agents[i].act(enc, mask, eps, explore);
            }
            auto [next, out] = env.step(state, joint);
            const CreditOutcome credited = assign_credit(credit, out);
            const Eigen::VectorXd next_enc = encoder.encode(next);
            episode_return += out.team_reward;

            for (std::size_t i = 0; i < N; ++i) {
                if (!out.acted[i]) continue;
                const double r = credited.rewards[i] / reward_scale;
                ++result.transitions;
                if (r >= support.v_min && r <= support.v_max) ++result.transitions_in_support;
                result.agents[i].remember(agent::Transition{enc, joint[i], r, next_enc, out.per_agent_done[i],
                                                            env.feasible_actions(next, static_cast<int>(i))});
            }
            if (step > sched.warmup_steps) {
                for (auto& a : result.agents) a.train_step();
            }

            if (next.done) {
                state = env.reset(training_episode_seed(episodes()));
                enc = encoder.encode(state);
                episode_return = 0.0;
            } else {
                state = std::move(next);
                enc = next_enc;
            }

            if (step % sched.eval_period == 0) {
                const EvalStats ev =
                    evaluate_policy(result.agents, env, encoder, sched.eval_episodes, eval_base, sched.eval_epsilon);
                result.curve.push_back(CheckpointStats{step, ev.final_mae_mean(), ev.final_mae_std(),
                                                       ev.step_mean_mae_mean(), ev.team_return_mean()});
            }
        }
    } catch (const NumericError& e) {
        result.diverged = true;
        result.failure = e.what();
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    const auto threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Artifacts

std::string software_version() { return "plume_scout 0.1.0"; }

std::string file_sha256(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "' for hashing");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

const char* kSeedPolicy =
    "training episodes reset with even environment seeds, evaluation episodes with odd seeds";

}  // namespace

json run_config_to_json(const RunConfig& c) {
    json j;
    j["scenario"] = scenario_to_json(c.scenario);
    j["scenario_base_dir"] = c.scenario_base_dir;
    j["num_agents"] = c.num_agents;
    j["budget_m"] = c.budget ? json(*c.budget) : json(nullptr);
    j["alpha"] = c.alpha ? json(*c.alpha) : json(nullptr);
    j["resolved_alpha"] = c.alpha.value_or(c.scenario.covariance.alpha);
    j["method"] = method_name(c.method);
    j["gamma_credit"] = c.gamma_credit ? json(*c.gamma_credit) : json(nullptr);
    j["resolved_gamma_credit"] = c.resolved_gamma_credit();
    const auto& s = c.schedule;
    j["schedule"] = {{"total_steps", s.total_steps},
                     {"eval_period", s.eval_period},
                     {"eval_episodes", s.eval_episodes},
                     {"warmup_steps", s.warmup_steps},
                     {"epsilon_start", s.epsilon_start},
                     {"epsilon_end", s.epsilon_end},
                     {"epsilon_decay_fraction", s.epsilon_decay_fraction},
                     {"eval_epsilon", s.eval_epsilon}};
    j["seeds"] = c.seeds;
    j["redraw_background_per_seed"] = c.redraw_background_per_seed;
    j["baseline_episodes"] = c.baseline_episodes;
    const auto& a = c.c51;
    j["c51"] = {{"num_atoms", a.support.num_atoms},
                {"v_min", a.support.v_min},
                {"v_max", a.support.v_max},
                {"hidden", {a.hidden1, a.hidden2}},
                {"discount", a.discount},
                {"batch_size", a.batch_size},
                {"buffer_capacity", a.buffer_capacity},
                {"target_period", a.target_period},
                {"learning_rate", a.adam.learning_rate},
                {"adam_beta1", a.adam.beta1},
                {"adam_beta2", a.adam.beta2},
                {"adam_epsilon", a.adam.epsilon}};
    j["reward_normalization"] = "credited reward / std(background)";
    j["workers"] = c.workers;
    return j;
}

RunConfig run_config_from_json(const json& j) {
    try {
        RunConfig c;
        c.scenario = scenario_from_json(j.at("scenario"));
        c.scenario_base_dir = j.at("scenario_base_dir").get<std::string>();
        c.num_agents = j.at("num_agents").get<int>();
        if (!j.at("budget_m").is_null()) c.budget = j.at("budget_m").get<double>();
        if (!j.at("alpha").is_null()) c.alpha = j.at("alpha").get<double>();
        c.method = parse_method(j.at("method").get<std::string>());
        if (!j.at("gamma_credit").is_null()) c.gamma_credit = j.at("gamma_credit").get<double>();
        const auto& s = j.at("schedule");
        c.schedule.total_steps = s.at("total_steps").get<std::uint64_t>();
        c.schedule.eval_period = s.at("eval_period").get<std::uint64_t>();
        c.schedule.eval_episodes = s.at("eval_episodes").get<int>();
        c.schedule.warmup_steps = s.at("warmup_steps").get<std::uint64_t>();
        c.schedule.epsilon_start = s.at("epsilon_start").get<double>();
        c.schedule.epsilon_end = s.at("epsilon_end").get<double>();
        c.schedule.epsilon_decay_fraction = s.at("epsilon_decay_fraction").get<double>();
        c.schedule.eval_epsilon = s.at("eval_epsilon").get<double>();
        c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        c.redraw_background_per_seed = j.at("redraw_background_per_seed").get<bool>();
        c.baseline_episodes = j.at("baseline_episodes").get<int>();
        const auto& a = j.at("c51");
        c.c51.support.num_atoms = a.at("num_atoms").get<int>();
        c.c51.support.v_min = a.at("v_min").get<double>();
        c.c51.support.v_max = a.at("v_max").get<double>();
        c.c51.hidden1 = a.at("hidden").at(0).get<Eigen::Index>();
        c.c51.hidden2 = a.at("hidden").at(1).get<Eigen::Index>();
        c.c51.discount = a.at("discount").get<double>();
        c.c51.batch_size = a.at("batch_size").get<std::size_t>();
        c.c51.buffer_capacity = a.at("buffer_capacity").get<std::size_t>();
        c.c51.target_period = a.at("target_period").get<std::uint64_t>();
        c.c51.adam.learning_rate = a.at("learning_rate").get<double>();
        c.c51.adam.beta1 = a.at("adam_beta1").get<double>();
        c.c51.adam.beta2 = a.at("adam_beta2").get<double>();
        c.c51.adam.epsilon = a.at("adam_epsilon").get<double>();
        c.workers = j.at("workers").get<int>();
        return c;
    } catch (const json::exception& e) {
        throw FormatError(std::string("run config: ") + e.what());
    }
}

void write_learning_curve(const fs::path& path, const RunArtifacts& run) {
    std::string csv = "method,seed,step,eval_final_mae_mean,eval_final_mae_std,eval_step_mean_mae,team_return_mean\n";
    for (const auto& s : run.seeds) {
        for (const auto& c : s.curve) {
            csv += method_name(run.config.method) + "," + std::to_string(s.seed) + "," + std::to_string(c.step) + "," +
                   fmt(c.final_mae_mean) + "," + fmt(c.final_mae_std) + "," + fmt(c.step_mean_mae) + "," +
                   fmt(c.team_return_mean) + "\n";
        }
    }
    write_text(path, csv);
}

RunArtifacts run_training(const RunConfig& config, const std::optional<fs::path>& out_dir) {
    config.validate();
    if (config.method == Method::random) throw InvalidArgument("the random method is not trained; use the baseline");
    const auto started = std::chrono::steady_clock::now();
    RunArtifacts run;
    run.config = config;
    run.seeds.resize(config.seeds.size());
    parallel_for(config.seeds.size(), config.workers,
                 [&](std::size_t i) { run.seeds[i] = train_seed(config, config.seeds[i]); });
    run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    if (out_dir) {
        fs::create_directories(*out_dir);
        json manifest;
        manifest["software_version"] = software_version();
        manifest["config"] = run_config_to_json(config);
        manifest["seed_policy"] = kSeedPolicy;
        manifest["wall_seconds"] = run.wall_seconds;
        json artifacts = json::array();
        json seeds = json::array();

        const fs::path curve = *out_dir / "learning_curve.csv";
        write_learning_curve(curve, run);
        artifacts.push_back({{"path", "learning_curve.csv"}, {"sha256", file_sha256(curve)}});
        for (const auto& s : run.seeds) {
            const fs::path dir = *out_dir / "checkpoints" / ("seed_" + std::to_string(s.seed));
            fs::create_directories(dir);
            for (std::size_t i = 0; i < s.agents.size(); ++i) {
                const fs::path ckpt = dir / ("agent_" + std::to_string(i) + ".ckpt");
                s.agents[i].save(ckpt.string());
                artifacts.push_back(
                    {{"path", fs::relative(ckpt, *out_dir).generic_string()}, {"sha256", file_sha256(ckpt)}});
            }
            seeds.push_back({{"seed", s.seed},
                             {"status", s.diverged ? "diverged" : "ok"},
                             {"failure", s.failure},
                             {"checkpoints", s.curve.size()},
                             {"transitions", s.transitions},
                             {"reward_in_support_fraction",
                              s.transitions ? double(s.transitions_in_support) / double(s.transitions) : 1.0},
                             {"wall_seconds", s.wall_seconds}});
        }
        manifest["seeds"] = seeds;
        manifest["artifacts"] = artifacts;
        write_text(*out_dir / "manifest.json", manifest.dump(2) + "\n");
    }
    return run;
}

// ---------------------------------------------------------------------------
// Sweeps

SweepResult sweep(const RunConfig& base, const SweepAxes& axes, const std::optional<fs::path>& out_dir) {
    base.validate();
    const std::vector<double> alphas = axes.alphas.empty()
                                           ? std::vector<double>{base.alpha.value_or(base.scenario.covariance.alpha)}
                                           : axes.alphas;
    const double base_budget = base.budget.value_or(base.scenario.episode.budgets_m.front());
    const std::vector<double> budgets = axes.budgets.empty() ? std::vector<double>{base_budget} : axes.budgets;
    const std::vector<int> agent_counts = axes.agents.empty() ? std::vector<int>{base.num_agents} : axes.agents;
    const std::vector<Method> methods = axes.methods.empty() ? std::vector<Method>{base.method} : axes.methods;

    struct Job {
        RunConfig config;
        std::uint64_t seed;
        std::size_t cell;
    };
    SweepResult result;
    std::vector<Job> jobs;
    for (Method m : methods) {
        for (double alpha : alphas) {
            for (double budget : budgets) {
                for (int na : agent_counts) {
                    RunConfig cfg = base;
                    cfg.method = m;
                    cfg.alpha = alpha;
                    cfg.budget = budget;
                    cfg.num_agents = na;
                    cfg.gamma_credit = base.gamma_credit;
                    cfg.workers = 1;
                    cfg.validate();
                    result.cells.push_back(SweepCell{m, alpha, budget, na, {}, 0.0, 0.0, 0.0, {}});
                    for (std::uint64_t s : base.seeds) jobs.push_back(Job{cfg, s, result.cells.size() - 1});
                }
            }
        }
    }

    struct JobOutput {
        bool ok = true;
        std::string failure;
        double final_mae = 0.0;
        std::vector<CheckpointStats> curve;
    };
    std::vector<JobOutput> outputs(jobs.size());
    parallel_for(jobs.size(), base.workers, [&](std::size_t j) {
        const Job& job = jobs[j];
        JobOutput& o = outputs[j];
        try {
            if (job.config.method == Method::random) {
                const auto scenario = materialize_scenario(job.config, job.seed);
                const Environment env(scenario, make_env_config(*scenario, job.config.num_agents, job.config.budget));
                const EvalStats ev = run_random_baseline(env, job.config.baseline_episodes, mix(job.seed, kEvalStream));
                o.final_mae = ev.final_mae_mean();
                o.curve.push_back(CheckpointStats{0, ev.final_mae_mean(), ev.final_mae_std(), ev.step_mean_mae_mean(),
                                                  ev.team_return_mean()});
            } else {
                SeedResult sr = train_seed(job.config, job.seed);
                if (sr.diverged || sr.curve.empty()) {
                    o.ok = false;
                    o.failure = sr.diverged ? sr.failure : "no checkpoints";
                } else {
                    o.final_mae = sr.curve.back().final_mae_mean;
                }
                o.curve = std::move(sr.curve);
            }
        } catch (const std::exception& e) {
            o.ok = false;
            o.failure = e.what();
        }
    });

    for (std::size_t j = 0; j < jobs.size(); ++j) {
        SweepCell& cell = result.cells[jobs[j].cell];
        if (outputs[j].ok) {
            cell.seed_final_mae.push_back(outputs[j].final_mae);
        } else {
            cell.failures.push_back("seed " + std::to_string(jobs[j].seed) + ": " + outputs[j].failure);
        }
    }
    for (auto& cell : result.cells) {
        if (cell.seed_final_mae.empty()) {
            cell.final_mae_mean = cell.ci95_low = cell.ci95_high = std::nan("");
            continue;
        }
        cell.final_mae_mean = stats::mean(cell.seed_final_mae);
        const auto ci = stats::student_t_interval(cell.seed_final_mae, 0.95);
        cell.ci95_low = ci.low;
        cell.ci95_high = ci.high;
    }

    if (out_dir) {
        fs::create_directories(*out_dir);
        std::string tidy =
            "method,alpha,budget,n_agents,seed,step,eval_final_mae_mean,eval_final_mae_std,eval_step_mean_mae,"
            "team_return_mean\n";
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            const auto& c = jobs[j].config;
            for (const auto& cp : outputs[j].curve) {
                tidy += method_name(c.method) + "," + fmt(*c.alpha) + "," + fmt(*c.budget) + "," +
                        std::to_string(c.num_agents) + "," + std::to_string(jobs[j].seed) + "," +
                        std::to_string(cp.step) + "," + fmt(cp.final_mae_mean) + "," + fmt(cp.final_mae_std) + "," +
                        fmt(cp.step_mean_mae) + "," + fmt(cp.team_return_mean) + "\n";
            }
        }
        write_text(*out_dir / "sweep_runs.csv", tidy);
        write_summary(*out_dir / "summary.csv", result);

        json manifest;
        manifest["software_version"] = software_version();
        manifest["base_config"] = run_config_to_json(base);
        manifest["seed_policy"] = kSeedPolicy;
        manifest["ci_method"] = "two-sided 95% Student-t over per-seed final MAE means";
        json failures = json::array();
        for (const auto& cell : result.cells) {
            for (const auto& f : cell.failures) failures.push_back(method_name(cell.method) + ": " + f);
        }
        manifest["failures"] = failures;
        manifest["artifacts"] = json::array(
            {{{"path", "sweep_runs.csv"}, {"sha256", file_sha256(*out_dir / "sweep_runs.csv")}},
             {{"path", "summary.csv"}, {"sha256", file_sha256(*out_dir / "summary.csv")}}});
        write_text(*out_dir / "manifest.json", manifest.dump(2) + "\n");
    }
    return result;
}

void write_summary(const fs::path& path, const SweepResult& result) {
    std::string csv = "# final MAE mean over seeds; ci95 = two-sided Student-t over per-seed means\n";
    csv += "method,alpha,budget,n_agents,final_mae_mean,ci95_low,ci95_high,n_seeds\n";
    for (const auto& c : result.cells) {
        csv += method_name(c.method) + "," + fmt(c.alpha) + "," + fmt(c.budget) + "," + std::to_string(c.num_agents) +
               "," + fmt(c.final_mae_mean) + "," + fmt(c.ci95_low) + "," + fmt(c.ci95_high) + "," +
               std::to_string(c.seed_final_mae.size()) + "\n";
    }
    write_text(path, csv);
}

}  // namespace plume_scout::harness
