#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "plume_scout/envsim.hpp"
#include "plume_scout/errors.hpp"
#include "plume_scout/stats.hpp"

using namespace plume_scout;

namespace {

std::shared_ptr<const Scenario> preset() {
    static const auto s = std::make_shared<const Scenario>(build_scenario(paperlike_preset()));
    return s;
}

// 1x2 grid matching the BLUE worked example: x_b = (10, 10), B = [[4,2],[2,4]], truth(0) = 4.
std::shared_ptr<const Scenario> two_cell() {
    ScenarioSpec spec;
    spec.grid = make_grid(1, 2, 50.0);
    spec.covariance = CovarianceModel{0.2, std::log(2.0) / 50.0, 0.0, 1e-6};
    spec.episode.sense_at_start = false;
    const Field truth(spec.grid, Eigen::Vector2d(4.0, 9.0));
    const Field background(spec.grid, Eigen::Vector2d(10.0, 10.0));
    return std::make_shared<const Scenario>(
        Scenario{spec, truth, background, BackgroundCov(Eigen::Matrix2d{{4.0, 2.0}, {2.0, 4.0}})});
}

std::vector<int> random_joint(const Environment& env, const EnvState& s, std::mt19937_64& rng) {
    std::vector<int> joint(static_cast<std::size_t>(env.num_agents()), kNoAction);
    for (int i = 0; i < env.num_agents(); ++i) {
        const ActionMask m = env.feasible_actions(s, i);
        std::vector<int> opts;
        for (std::size_t j = 0; j < m.size(); ++j) {
            if (m[j]) opts.push_back(static_cast<int>(j));
        }
        if (!opts.empty()) joint[static_cast<std::size_t>(i)] = opts[std::uniform_int_distribution<std::size_t>(0, opts.size() - 1)(rng)];
    }
    return joint;
}

}  // namespace

TEST_CASE("move cost") {
    const GridSpec g = make_grid(10, 10, 50.0);
    CHECK(move_cost(g, 0, 1) == doctest::Approx(50.0));
    CHECK(move_cost(g, 4, 4) == 0.0);
    CHECK(move_cost(g, 0, 99) == doctest::Approx(636.40).epsilon(1e-5));
}

TEST_CASE("team rewards") {
    const GridSpec g = make_grid(1, 3, 1.0);
    const Field a(g, Eigen::Vector3d(5, 6, 7));
    CHECK(team_reward_da(a, a, 1) == 0.0);
    CHECK(team_reward_da(a, Field(g, Eigen::Vector3d(3, 4, 5)), 1) == doctest::Approx(2.0));
    CHECK(team_reward_da(a, Field(g, Eigen::Vector3d(3, 4, 5)), -1) == doctest::Approx(-2.0));

    const Field truth(g, Eigen::Vector3d(1, 1, 1));
    const Field bg(g, Eigen::Vector3d(3, 3, 3));
    CHECK(team_reward_gt(truth, truth, bg) == doctest::Approx(1.0));
    CHECK(team_reward_gt(truth, bg, bg) == doctest::Approx(0.0));
    CHECK(team_reward_gt(truth, Field(g, Eigen::Vector3d(2, 2, 2)), bg) == doctest::Approx(0.5));
    CHECK_THROWS_AS(team_reward_gt(truth, bg, truth), InvalidScenario);
}

TEST_CASE("reset") {
    const Environment env(preset(), make_env_config(*preset(), 3));
    const EnvState s = env.reset(12);
    std::set<std::size_t> cells;
    for (const auto& d : s.drones) {
        cells.insert(d.cell);
        CHECK(d.budget == 2000.0);
        CHECK(d.active);
    }
    CHECK(cells.size() == 3);
    CHECK(s.observations.size() == 3);
    CHECK(s.reward_reference.values == preset()->background.values);
    const EnvState again = env.reset(12);
    CHECK(again.drones == s.drones);
    CHECK(again.analysis.values == s.analysis.values);

    ScenarioSpec one = paperlike_preset();
    one.grid = make_grid(1, 1, 50.0);
    one.truth = PlumeSpec{{{0, 0, 10.0, 30.0}}, 1.0};
    const auto tiny = std::make_shared<const Scenario>(build_scenario(one));
    const Environment e1(tiny, make_env_config(*tiny, 1));
    const EnvState s1 = e1.reset(3);
    CHECK(s1.drones[0].cell == 0);
    CHECK(s1.done);  // no other cell to fly to
    CHECK_THROWS_AS(Environment(tiny, make_env_config(*tiny, 2)).reset(1), InvalidArgument);
}

TEST_CASE("feasible actions") {
    const Environment env(preset(), make_env_config(*preset(), 1));
    EnvState s = env.reset(1);
    s.drones[0].cell = 0;
    ActionMask m = env.feasible_actions(s, 0);
    CHECK(std::count(m.begin(), m.end(), true) == 99);
    CHECK_FALSE(m[0]);
    s.drones[0].budget = 49.0;
    m = env.feasible_actions(s, 0);
    CHECK(std::none_of(m.begin(), m.end(), [](bool b) { return b; }));
    s.drones[0].budget = 2000.0;
    s.drones[0].active = false;
    m = env.feasible_actions(s, 0);
    CHECK(std::none_of(m.begin(), m.end(), [](bool b) { return b; }));
}

TEST_CASE("step on the worked two-cell example") {
    const auto sc = two_cell();
    const Environment env(sc, make_env_config(*sc, 1));
    std::uint64_t seed = 0;
    while (env.reset(seed).drones[0].cell != 1) ++seed;
    const EnvState s = env.reset(seed);
    CHECK(s.analysis.values == sc->background.values);
    const std::vector<int> joint{0};
    const auto [next, out] = env.step(s, joint);
    CHECK(next.analysis.values[0] == doctest::Approx(4.0));
    CHECK(next.analysis.values[1] == doctest::Approx(7.0));
    CHECK(out.team_reward == doctest::Approx(4.5));
    REQUIRE(out.counterfactuals[0].has_value());
    CHECK(*out.counterfactuals[0] == doctest::Approx(0.0));
    CHECK(next.drones[0].budget == doctest::Approx(1950.0));
}

TEST_CASE("diagonal move cost is charged") {
    const Environment env(preset(), make_env_config(*preset(), 1));
    EnvState s = env.reset(1);
    s.drones[0].cell = 0;
    const std::vector<int> joint{11};
    const auto [next, out] = env.step(s, joint);
    CHECK(next.drones[0].budget == doctest::Approx(1929.29).epsilon(1e-5));
}

TEST_CASE("landing") {
    const Environment env(preset(), make_env_config(*preset(), 2));
    const EnvState start = env.reset(4);
    // The first step still credits the start-position sensing against x_b, so land at step 2.
    std::mt19937_64 rng(6);
    const EnvState s = env.step(start, random_joint(env, start, rng)).first;
    const std::vector<int> joint{kLand, kLand};
    const auto [next, out] = env.step(s, joint);
    CHECK(out.team_reward == 0.0);
    CHECK(next.analysis.values == s.analysis.values);
    CHECK(next.done);
    CHECK(out.episode_done);
    CHECK_FALSE(out.counterfactuals[0].has_value());
    CHECK_THROWS_AS(env.step(next, joint), ContractViolation);

    const std::vector<int> bad{s.drones[0].cell == 0 ? 1 : 0, static_cast<int>(s.drones[1].cell)};
    CHECK_THROWS_AS(env.step(s, bad), ContractViolation);
}

TEST_CASE("episode invariants under random policies") {
    std::mt19937_64 rng(99);
    for (int N = 1; N <= 3; ++N) {
        const Environment env(preset(), make_env_config(*preset(), N));
        for (int e = 0; e < 30; ++e) {
            EnvState s = env.reset(rng());
            double total = 0.0;
            int steps = 0;
            while (!s.done) {
                const auto joint = random_joint(env, s, rng);
                auto [next, out] = env.step(s, joint);
                const auto acted = static_cast<std::size_t>(std::count(out.acted.begin(), out.acted.end(), true));
                CHECK(next.observations.size() == s.observations.size() + acted);
                for (std::size_t i = 0; i < s.drones.size(); ++i) {
                    CHECK(next.drones[i].budget <= s.drones[i].budget);
                    if (!s.drones[i].active) CHECK(next.drones[i] == s.drones[i]);
                    CHECK(out.counterfactuals[i].has_value() == static_cast<bool>(out.acted[i]));
                }
                total += out.team_reward;
                s = std::move(next);
                ++steps;
            }
            CHECK(steps <= env.config().max_steps);
            const double telescoped = (preset()->background.values - s.analysis.values).mean();
            CHECK(std::abs(total - telescoped) < 1e-9 * preset()->background.stddev());
        }
    }
}

TEST_CASE("default step cap") {
    const auto cfg = make_env_config(*preset(), 2);
    CHECK(cfg.max_steps == 40);
    CHECK(make_env_config(*preset(), 2, 120.0).max_steps == 3);
    CHECK(make_env_config(*preset(), 2, 120.0).budgets == std::vector<double>{120.0, 120.0});
}

TEST_CASE("determinism from seed and actions") {
    const Environment env(preset(), make_env_config(*preset(), 2));
    auto play = [&] {
        std::mt19937_64 rng(5);
        std::vector<EnvState> states{env.reset(8)};
        while (!states.back().done) states.push_back(env.step(states.back(), random_joint(env, states.back(), rng)).first);
        return states;
    };
    const auto a = play(), b = play();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].drones == b[i].drones);
        CHECK(a[i].analysis.values == b[i].analysis.values);
    }
}

TEST_CASE("random policies improve on the background on average") {
    const Environment env(preset(), make_env_config(*preset(), 2));
    std::mt19937_64 rng(2024);
    std::vector<double> finals;
    for (int e = 0; e < 200; ++e) {
        EnvState s = env.reset(rng());
        while (!s.done) s = env.step(s, random_joint(env, s, rng)).first;
        finals.push_back(mae(preset()->truth, s.analysis));
    }
    CHECK(stats::student_t_upper(finals, 0.95) < mae(preset()->truth, preset()->background));
}

TEST_CASE("trace records are JSON") {
    const Environment env(preset(), make_env_config(*preset(), 2));
    const EnvState s = env.reset(3);
    std::mt19937_64 rng(1);
    const auto [next, out] = env.step(s, random_joint(env, s, rng));
    const auto j = nlohmann::json::parse(trace_record(next, out));
    CHECK(j.at("step") == 1);
    CHECK(j.at("drones").size() == 2);
    CHECK(j.at("team_reward").get<double>() == doctest::Approx(out.team_reward));
}
