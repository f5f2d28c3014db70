#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "plume_scout/credit.hpp"
#include "plume_scout/envsim.hpp"
#include "plume_scout/errors.hpp"

using namespace plume_scout;
using Cf = std::vector<std::optional<double>>;

TEST_CASE("equal split") {
    auto o = equal_split(0.9, {true, true, true});
    CHECK(o.rewards[0] == doctest::Approx(0.3));
    CHECK(o.rewards[2] == doctest::Approx(0.3));
    o = equal_split(0.9, {true, true, false});
    CHECK(o.rewards[0] == doctest::Approx(0.45));
    CHECK(o.rewards[1] == doctest::Approx(0.45));
    CHECK(o.rewards[2] == 0.0);
    o = equal_split(0.0, {true, true});
    CHECK(o.rewards == std::vector<double>{0.0, 0.0});
}

TEST_CASE("DA difference rewards") {
    const Cf cf{0.2, 0.4};
    const auto o = diff_rewards_da(0.1, cf, 0.5, {true, true});
    CHECK(o.contributions[0] == doctest::Approx(1.5));
    CHECK(o.contributions[1] == doctest::Approx(-0.5));
    CHECK(o.rewards[0] == doctest::Approx(0.15));
    CHECK(o.rewards[1] == doctest::Approx(-0.05));

    const auto flat = diff_rewards_da(0.6, Cf{0.3, 0.3, 0.3}, 1.0 / 3.0, {true, true, true});
    for (double c : flat.contributions) CHECK(c == doctest::Approx(1.0 / 3.0));

    const auto landed = diff_rewards_da(0.6, Cf{0.1, std::nullopt, 0.5}, 0.5, {true, false, true});
    CHECK(landed.rewards[1] == 0.0);
    CHECK(landed.contributions[0] + landed.contributions[2] == doctest::Approx(1.0));
}

TEST_CASE("GT difference rewards") {
    const auto o = diff_rewards_gt(2.0, Cf{1.0, 3.0}, {true, true});
    CHECK(o.contributions[0] == doctest::Approx(0.75));
    CHECK(o.contributions[1] == doctest::Approx(0.25));
    CHECK(o.rewards[0] == doctest::Approx(1.5));
    CHECK(diff_rewards_gt(0.7, Cf{0.4}, {true}).contributions[0] == 1.0);
    const auto zero = diff_rewards_gt(0.7, Cf{0.5, -0.5}, {true, true});
    CHECK(zero.contributions[0] == doctest::Approx(0.5));
}

TEST_CASE("credit properties on random inputs") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.05, 2.0);
    for (int t = 0; t < 2000; ++t) {
        const int N = std::uniform_int_distribution<int>(2, 3)(rng);
        std::vector<bool> active(static_cast<std::size_t>(N), true);
        if (N == 3 && t % 3 == 0) active[static_cast<std::size_t>(t % 2)] = false;
        Cf cf(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i) {
            if (active[static_cast<std::size_t>(i)]) cf[static_cast<std::size_t>(i)] = z(rng);
        }
        const double R = z(rng), gamma = u(rng);

        for (int strategy = 0; strategy < 3; ++strategy) {
            const CreditOutcome o = strategy == 0   ? equal_split(R, active)
                                    : strategy == 1 ? diff_rewards_da(R, cf, gamma, active)
                                                    : diff_rewards_gt(R, cf, active);
            double csum = 0.0, rsum = 0.0;
            for (int i = 0; i < N; ++i) {
                const auto k = static_cast<std::size_t>(i);
                if (!active[k]) {
                    CHECK(o.rewards[k] == 0.0);
                    CHECK(o.contributions[k] == 0.0);
                    continue;
                }
                csum += o.contributions[k];
                rsum += o.rewards[k];
            }
            CHECK(csum == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(rsum == doctest::Approx(R).epsilon(1e-9).scale(1.0));
        }

        // Incentive direction: better-off-without means lower contribution.
        const auto o = diff_rewards_da(R, cf, gamma, active);
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) {
                const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
                if (active[a] && active[b] && *cf[a] > *cf[b]) CHECK(o.contributions[a] < o.contributions[b]);
            }
        }

        // Permutation equivariance.
        std::vector<std::size_t> perm(static_cast<std::size_t>(N));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Cf cfp(perm.size());
        std::vector<bool> ap(perm.size());
        for (std::size_t k = 0; k < perm.size(); ++k) {
            cfp[k] = cf[perm[k]];
            ap[k] = active[perm[k]];
        }
        const auto op = diff_rewards_da(R, cfp, gamma, ap);
        for (std::size_t k = 0; k < perm.size(); ++k) {
            CHECK(op.contributions[k] == doctest::Approx(o.contributions[perm[k]]));
        }
    }
}

TEST_CASE("assign_credit on a step outcome") {
    StepOutcome out;
    out.team_reward = 0.1;
    out.acted = {true, true};
    out.counterfactuals = {0.2, 0.4};
    const auto diff = assign_credit(CreditConfig{CreditStrategy::diff_da, 0.5}, out);
    CHECK(diff.rewards[0] == doctest::Approx(0.15));
    const auto eq = assign_credit(CreditConfig{CreditStrategy::equal, 0.5}, out);
    CHECK(eq.rewards[1] == doctest::Approx(0.05));

    out.acted = {false, false};
    out.counterfactuals = {std::nullopt, std::nullopt};
    out.team_reward = 0.0;
    const auto none = assign_credit(CreditConfig{CreditStrategy::diff_da, 0.5}, out);
    CHECK(none.rewards == std::vector<double>{0.0, 0.0});

    CHECK_THROWS_AS((CreditConfig{CreditStrategy::diff_da, 0.0}.validate()), InvalidArgument);
}
