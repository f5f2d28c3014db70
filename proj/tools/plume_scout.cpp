// plume-scout: scenario authoring, training, evaluation, baselines, sweeps, reports.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "plume_scout/errors.hpp"
#include "plume_scout/harness.hpp"
#include "plume_scout/report.hpp"
#include "plume_scout/scenario_file.hpp"
#include "plume_scout/stats.hpp"

namespace fs = std::filesystem;
using namespace plume_scout;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitIo = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int default_workers() {
    if (const char* env = std::getenv("PLUME_SCOUT_WORKERS")) {
        const int w = std::atoi(env);
        if (w >= 1) return w;
        std::cerr << "warning: ignoring PLUME_SCOUT_WORKERS='" << env << "'\n";
    }
    return 1;
}

void prepare_out_dir(const fs::path& dir, bool force) {
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!fs::is_directory(dir)) throw UsageError("output '" + dir.string() + "' exists and is not a directory");
        if (!fs::is_empty(dir) && !force) {
            throw UsageError("output directory '" + dir.string() + "' is not empty (use --force to overwrite)");
        }
        return;
    }
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ScenarioSpec load_scenario_arg(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("scenario '" + path + "' does not exist");
    return load_scenario_file(path);
}

std::string base_dir_of(const std::string& path) {
    const fs::path parent = fs::absolute(path).parent_path();
    return parent.string();
}

std::string eval_csv(const harness::EvalStats& s) {
    std::string csv = "episode,final_mae,step_mean_mae,team_return\n";
    for (std::size_t i = 0; i < s.final_mae.size(); ++i) {
        std::ostringstream row;
        row.precision(17);
        row << i << ',' << s.final_mae[i] << ',' << s.step_mean_mae[i] << ',' << s.team_return[i] << '\n';
        csv += row.str();
    }
    return csv;
}

void print_eval_summary(const std::string& what, const harness::EvalStats& s) {
    const auto ci = stats::student_t_interval(s.final_mae, 0.95);
    std::cerr << what << ": " << s.final_mae.size() << " episodes, final MAE " << s.final_mae_mean() << " ppm (std "
              << s.final_mae_std() << ", 95% CI [" << ci.low << ", " << ci.high << "]), per-step MAE "
              << s.step_mean_mae_mean() << " ppm\n";
}

// Trace sink writing one JSON object per line.
struct TraceFile {
    std::ofstream out;
    explicit TraceFile(const std::string& path) : out(path, std::ios::trunc) {
        if (!out) throw IoError("cannot write trace '" + path + "'");
    }
    std::function<void(const std::string&)> sink() {
        return [this](const std::string& line) { out << line << '\n'; };
    }
};

std::vector<double> parse_doubles(const std::vector<std::string>& items, const std::string& flag) {
    std::vector<double> out;
    for (const auto& s : items) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty()) throw UsageError(flag + ": '" + s + "' is not a number");
        out.push_back(v);
    }
    return out;
}

// Moves plume sources onto a resized grid, keeping their relative positions.
void fit_sources(ScenarioSpec& spec, long long rows, long long cols) {
    auto* plume = std::get_if<PlumeSpec>(&spec.truth);
    if (!plume) return;
    const auto old_rows = spec.grid.rows, old_cols = spec.grid.cols;
    for (auto& src : plume->sources) {
        const double fr = old_rows > 1 ? double(src.row) / double(old_rows - 1) : 0.0;
        const double fc = old_cols > 1 ? double(src.col) / double(old_cols - 1) : 0.0;
        src.row = static_cast<decltype(src.row)>(std::lround(fr * double(rows - 1)));
        src.col = static_cast<decltype(src.col)>(std::lround(fc * double(cols - 1)));
    }
}

// ---------------------------------------------------------------------------

struct MakeScenarioArgs {
    std::string preset = "paperlike";
    std::string grid;
    std::optional<double> spacing, alpha, delta, bias, budget;
    std::optional<int> k;
    std::optional<std::uint64_t> background_seed;
    std::optional<std::string> reward_mode;
    std::optional<int> sign;
    std::string out;
    bool force = false;
};

int cmd_make_scenario(const MakeScenarioArgs& a) {
    if (a.preset != "paperlike") throw UsageError("unknown preset '" + a.preset + "' (valid: paperlike)");
    ScenarioSpec spec = paperlike_preset();
    if (!a.grid.empty()) {
        long long r = 0, c = 0;
        char x = 0, extra = 0;
        std::istringstream in(a.grid);
        if (!(in >> r >> x >> c) || (x != 'x' && x != 'X') || (in >> extra)) {
            throw UsageError("--grid expects ROWSxCOLS, got '" + a.grid + "'");
        }
        if (r < 1 || c < 1) throw UsageError("--grid dimensions must be positive");
        fit_sources(spec, r, c);
        spec.grid = make_grid(r, c, spec.grid.spacing);
    }
    if (a.spacing) spec.grid = make_grid(spec.grid.rows, spec.grid.cols, *a.spacing);
    if (a.alpha) spec.covariance.alpha = *a.alpha;
    if (a.delta) spec.covariance.delta = *a.delta;
    if (a.bias) spec.background.bias = *a.bias;
    if (a.k) spec.background.k = *a.k;
    if (a.background_seed) spec.background.seed = *a.background_seed;
    if (a.budget) spec.episode.budgets_m = {*a.budget};
    if (a.reward_mode) {
        if (*a.reward_mode == "da") spec.reward.mode = RewardMode::da;
        else if (*a.reward_mode == "gt") spec.reward.mode = RewardMode::gt;
        else throw UsageError("--reward-mode must be da or gt");
    }
    if (a.sign) spec.reward.sign = *a.sign;
    spec.validate();
    if (fs::exists(a.out) && !a.force) throw UsageError("'" + a.out + "' exists (use --force to overwrite)");
    save_scenario_file(a.out, spec);
    std::cerr << "wrote " << a.out << " (" << spec.grid.size() << " cells)\n";
    return 0;
}

struct RunArgs {
    std::string scenario;
    int agents = 2;
    std::string method = "da-diff";
    std::uint64_t steps = 100000;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::optional<double> budget, alpha, gamma_credit;
    std::uint64_t eval_period = 1000;
    int eval_episodes = 10;
    int baseline_episodes = 200;
    bool redraw_background = false;
    int workers = default_workers();
    std::string out;
    bool force = false;
};

harness::RunConfig run_config(const RunArgs& a) {
    harness::RunConfig c;
    c.scenario = load_scenario_arg(a.scenario);
    c.scenario_base_dir = base_dir_of(a.scenario);
    c.num_agents = a.agents;
    c.method = harness::parse_method(a.method);
    c.schedule.total_steps = a.steps;
    c.schedule.eval_period = a.eval_period;
    c.schedule.eval_episodes = a.eval_episodes;
    c.seeds = a.seeds;
    c.budget = a.budget;
    c.alpha = a.alpha;
    c.gamma_credit = a.gamma_credit;
    c.baseline_episodes = a.baseline_episodes;
    c.redraw_background_per_seed = a.redraw_background;
    c.workers = a.workers;
    c.validate();
    return c;
}

int cmd_train(const RunArgs& a) {
    const harness::RunConfig config = run_config(a);
    if (config.method == harness::Method::random) {
        throw UsageError("the random method is not trained; use the baseline command");
    }
    prepare_out_dir(a.out, a.force);
    const auto run = harness::run_training(config, fs::path(a.out));
    for (const auto& s : run.seeds) {
        std::cerr << "seed " << s.seed << ": ";
        if (s.diverged) {
            std::cerr << "diverged (" << s.failure << ")\n";
        } else if (!s.curve.empty()) {
            std::cerr << "final eval MAE " << s.curve.back().final_mae_mean << " ppm, " << s.wall_seconds << " s\n";
        } else {
            std::cerr << "no checkpoints\n";
        }
    }
    return run.any_diverged() ? kExitDiverged : 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::optional<std::uint64_t> run_seed;
    int episodes = 100;
    std::uint64_t seed = 1;
    double epsilon = 0.01;
    std::string trace;
    std::string out;
    bool force = false;
};

int cmd_eval(const EvalArgs& a) {
    fs::path dir = a.checkpoint;
    if (!fs::is_directory(dir)) throw UsageError("checkpoint directory '" + a.checkpoint + "' does not exist");
    fs::path run_dir = dir;
    if (!fs::exists(run_dir / "manifest.json")) run_dir = dir.parent_path().parent_path();
    if (!fs::exists(run_dir / "manifest.json")) {
        throw UsageError("no manifest.json found for checkpoint '" + a.checkpoint + "'");
    }
    json manifest;
    try {
        manifest = json::parse(read_file(run_dir / "manifest.json"));
    } catch (const json::exception& e) {
        throw FormatError(std::string("manifest.json: ") + e.what());
    }
    const harness::RunConfig config = harness::run_config_from_json(manifest.at("config"));
    fs::path seed_dir = dir;
    std::uint64_t run_seed = 0;
    if (run_dir == dir) {
        run_seed = a.run_seed.value_or(config.seeds.front());
        seed_dir = run_dir / "checkpoints" / ("seed_" + std::to_string(run_seed));
    } else {
        const std::string name = dir.filename().string();
        if (name.rfind("seed_", 0) != 0) throw UsageError("checkpoint directory must be named seed_<N>");
        run_seed = std::stoull(name.substr(5));
    }
    std::vector<agent::C51Agent> agents;
    for (int i = 0; i < config.num_agents; ++i) {
        const fs::path p = seed_dir / ("agent_" + std::to_string(i) + ".ckpt");
        if (!fs::exists(p)) throw UsageError("missing checkpoint '" + p.string() + "'");
        agents.push_back(agent::C51Agent::load(p.string()));
    }
    const auto scenario = harness::materialize_scenario(config, run_seed);
    EnvConfig env_cfg = make_env_config(*scenario, config.num_agents, config.budget);
    env_cfg.reward.mode = harness::reward_mode_of(config.method);
    const Environment env(scenario, env_cfg);
    const auto encoder = agent::StateEncoder::for_scenario(*scenario, config.num_agents);

    prepare_out_dir(a.out, a.force);
    std::optional<TraceFile> trace;
    if (!a.trace.empty()) trace.emplace(a.trace);
    const auto ev = harness::evaluate_policy(agents, env, encoder, a.episodes, a.seed, a.epsilon,
                                             trace ? trace->sink() : std::function<void(const std::string&)>{});
    write_file(fs::path(a.out) / "eval.csv", eval_csv(ev));
    print_eval_summary(harness::method_label(config.method) + " (run seed " + std::to_string(run_seed) + ")", ev);
    return 0;
}

struct BaselineArgs {
    std::string scenario;
    int agents = 2;
    std::optional<double> budget, alpha;
    int episodes = 200;
    std::uint64_t seed = 1;
    std::string trace;
    std::string out;
    bool force = false;
};

int cmd_baseline(const BaselineArgs& a) {
    harness::RunConfig config;
    config.scenario = load_scenario_arg(a.scenario);
    config.scenario_base_dir = base_dir_of(a.scenario);
    config.num_agents = a.agents;
    config.budget = a.budget;
    config.alpha = a.alpha;
    config.method = harness::Method::random;
    config.validate();
    if (a.episodes < 1) throw UsageError("--episodes must be positive");
    const auto scenario = harness::materialize_scenario(config, a.seed);
    const Environment env(scenario, make_env_config(*scenario, config.num_agents, config.budget));

    prepare_out_dir(a.out, a.force);
    std::optional<TraceFile> trace;
    if (!a.trace.empty()) trace.emplace(a.trace);
    const auto ev = harness::run_random_baseline(env, a.episodes, a.seed,
                                                 trace ? trace->sink() : std::function<void(const std::string&)>{});
    write_file(fs::path(a.out) / "baseline.csv", eval_csv(ev));
    std::cerr << "background MAE " << mae(scenario->truth, scenario->background) << " ppm\n";
    print_eval_summary("random navigation", ev);
    return 0;
}

struct SweepArgs {
    RunArgs run;
    std::vector<std::string> alphas, budgets, methods;
    std::vector<int> agents_list;
};

int cmd_sweep(const SweepArgs& a) {
    const harness::RunConfig base = run_config(a.run);
    harness::SweepAxes axes;
    axes.alphas = parse_doubles(a.alphas, "--alphas");
    axes.budgets = parse_doubles(a.budgets, "--budgets");
    axes.agents = a.agents_list;
    for (const auto& m : a.methods) axes.methods.push_back(harness::parse_method(m));
    prepare_out_dir(a.run.out, a.run.force);
    const auto result = harness::sweep(base, axes, fs::path(a.run.out));
    int failed = 0;
    for (const auto& cell : result.cells) {
        for (const auto& f : cell.failures) std::cerr << harness::method_name(cell.method) << ": " << f << '\n';
        failed += static_cast<int>(cell.failures.size());
    }
    std::cerr << result.cells.size() << " cells written to " << a.run.out << '\n';
    return failed > 0 ? kExitDiverged : 0;
}

struct ReportArgs {
    std::string input;
    std::string out;
    bool force = false;
};

int cmd_report(const ReportArgs& a) {
    const fs::path in = a.input;
    fs::path curve, summary;
    if (fs::is_directory(in)) {
        if (fs::exists(in / "learning_curve.csv")) curve = in / "learning_curve.csv";
        else if (fs::exists(in / "sweep_runs.csv")) curve = in / "sweep_runs.csv";
        if (fs::exists(in / "summary.csv")) summary = in / "summary.csv";
    } else if (fs::exists(in)) {
        const std::string head = read_file(in).substr(0, 4096);
        (head.find("ci95_low") != std::string::npos ? summary : curve) = in;
    }
    if (curve.empty() && summary.empty()) {
        throw UsageError("no learning_curve.csv, sweep_runs.csv or summary.csv found at '" + a.input + "'");
    }
    prepare_out_dir(a.out, a.force);
    auto with_file = [](const fs::path& p, auto&& parse) {
        try {
            return parse(read_file(p));
        } catch (const FormatError& e) {
            throw FormatError(p.filename().string() + ": " + e.what());
        }
    };
    if (!curve.empty()) {
        const auto rows = with_file(curve, [](const std::string& s) { return report::parse_learning_curve(s); });
        if (rows.empty()) std::cerr << "warning: " << curve.string() << " has no data rows; chart has no series\n";
        write_file(fs::path(a.out) / "learning_curve.svg", report::learning_curve_svg(rows));
    }
    if (!summary.empty()) {
        const auto rows = with_file(summary, [](const std::string& s) { return report::parse_summary(s); });
        if (rows.empty()) std::cerr << "warning: " << summary.string() << " has no data rows; chart has no series\n";
        write_file(fs::path(a.out) / "budget_mae.svg", report::budget_svg(rows));
        write_file(fs::path(a.out) / "summary.md", report::summary_markdown(rows));
    }
    std::cerr << "report written to " << a.out << '\n';
    return 0;
}

void add_run_options(CLI::App* cmd, RunArgs& a) {
    cmd->add_option("--scenario", a.scenario, "scenario JSON")->required();
    cmd->add_option("--agents", a.agents, "number of drones")->check(CLI::Range(1, 3));
    cmd->add_option("--method", a.method, "da-diff | da-equal | gt-diff | gt-equal");
    cmd->add_option("--steps", a.steps, "training steps per seed");
    cmd->add_option("--seeds", a.seeds, "comma-separated training seeds")->delimiter(',');
    cmd->add_option("--budget", a.budget, "per-drone budget (m)");
    cmd->add_option("--alpha", a.alpha, "simulation-quality slope");
    cmd->add_option("--gamma-credit", a.gamma_credit, "difference-reward scale (default 1/N)");
    cmd->add_option("--eval-period", a.eval_period, "training steps between evaluations");
    cmd->add_option("--eval-episodes", a.eval_episodes, "episodes per evaluation");
    cmd->add_flag("--redraw-background", a.redraw_background, "draw a fresh background per seed");
    cmd->add_option("--workers", a.workers, "parallel jobs (default $PLUME_SCOUT_WORKERS or 1)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", a.out, "output directory")->required();
    cmd->add_flag("--force", a.force, "allow a non-empty output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-drone path planning for plume data assimilation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", harness::software_version());

    MakeScenarioArgs mk;
    auto* make = app.add_subcommand("make-scenario", "write a scenario JSON");
    make->add_option("--preset", mk.preset, "preset name (paperlike)");
    make->add_option("--grid", mk.grid, "grid size ROWSxCOLS");
    make->add_option("--spacing", mk.spacing, "cell spacing (m)");
    make->add_option("--alpha", mk.alpha, "simulation-quality slope");
    make->add_option("--delta", mk.delta, "correlation decay (1/m)");
    make->add_option("--bias", mk.bias, "multiplicative background bias");
    make->add_option("--k", mk.k, "background draws averaged");
    make->add_option("--background-seed", mk.background_seed, "background RNG seed");
    make->add_option("--budget", mk.budget, "per-drone budget (m)");
    make->add_option("--reward-mode", mk.reward_mode, "da | gt");
    make->add_option("--sign", mk.sign, "DA reward sign (+1 overestimating background, -1 under)");
    make->add_option("-o,--out", mk.out, "output file")->required();
    make->add_flag("--force", mk.force, "overwrite an existing file");

    RunArgs tr;
    auto* train = app.add_subcommand("train", "train agents and write a run directory");
    add_run_options(train, tr);

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "evaluate saved agents");
    eval->add_option("--checkpoint", ev.checkpoint, "run directory or checkpoints/seed_<N> directory")->required();
    eval->add_option("--run-seed", ev.run_seed, "training seed to load from a run directory");
    eval->add_option("--episodes", ev.episodes, "evaluation episodes")->check(CLI::PositiveNumber);
    eval->add_option("--seed", ev.seed, "evaluation seed");
    eval->add_option("--epsilon", ev.epsilon, "exploration rate during evaluation")->check(CLI::Range(0.0, 1.0));
    eval->add_option("--trace", ev.trace, "write per-step JSON lines here");
    eval->add_option("--out", ev.out, "output directory")->required();
    eval->add_flag("--force", ev.force, "allow a non-empty output directory");

    BaselineArgs bl;
    auto* baseline = app.add_subcommand("baseline", "random-navigation baseline");
    baseline->add_option("--scenario", bl.scenario, "scenario JSON")->required();
    baseline->add_option("--agents", bl.agents, "number of drones")->check(CLI::Range(1, 3));
    baseline->add_option("--budget", bl.budget, "per-drone budget (m)");
    baseline->add_option("--alpha", bl.alpha, "simulation-quality slope");
    baseline->add_option("--episodes", bl.episodes, "episodes");
    baseline->add_option("--seed", bl.seed, "baseline seed");
    baseline->add_option("--trace", bl.trace, "write per-step JSON lines here");
    baseline->add_option("--out", bl.out, "output directory")->required();
    baseline->add_flag("--force", bl.force, "allow a non-empty output directory");

    SweepArgs sw;
    auto* sweep = app.add_subcommand("sweep", "Cartesian sweep over alpha, budget, agents and method");
    add_run_options(sweep, sw.run);
    sweep->add_option("--alphas", sw.alphas, "comma-separated alphas")->delimiter(',');
    sweep->add_option("--budgets", sw.budgets, "comma-separated budgets (m)")->delimiter(',');
    sweep->add_option("--agents-list", sw.agents_list, "comma-separated drone counts")->delimiter(',');
    sweep->add_option("--methods", sw.methods, "comma-separated methods, including random")->delimiter(',');
    sweep->add_option("--baseline-episodes", sw.run.baseline_episodes, "episodes per seed for random cells");

    ReportArgs rp;
    auto* rep = app.add_subcommand("report", "render SVG charts and a markdown table");
    rep->add_option("--input", rp.input, "run/sweep directory or CSV file")->required();
    rep->add_option("--out", rp.out, "output directory")->required();
    rep->add_flag("--force", rp.force, "allow a non-empty output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*make) return cmd_make_scenario(mk);
        if (*train) return cmd_train(tr);
        if (*eval) return cmd_eval(ev);
        if (*baseline) return cmd_baseline(bl);
        if (*sweep) return cmd_sweep(sw);
        if (*rep) return cmd_report(rp);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidScenario& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDiverged;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
