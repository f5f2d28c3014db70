#include "plume_scout/credit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plume_scout/envsim.hpp"
#include "plume_scout/errors.hpp"

namespace plume_scout {

void CreditConfig::validate() const {
    if (!(gamma_credit > 0.0) || !std::isfinite(gamma_credit)) throw InvalidArgument("gamma_credit must be > 0");
}

namespace {

std::size_t count_active(const std::vector<bool>& active) {
    return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

CreditOutcome from_contributions(double team_reward, std::vector<double> c) {
    CreditOutcome out;
    out.rewards.resize(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out.rewards[i] = team_reward * c[i];
    out.contributions = std::move(c);
    return out;
}

void require_counterfactuals(std::span<const std::optional<double>> cf, const std::vector<bool>& active) {
    if (cf.size() != active.size()) throw InvalidArgument("counterfactual and active-mask sizes differ");
    for (std::size_t i = 0; i < active.size(); ++i) {
        if (active[i] && !cf[i]) throw InvalidArgument("missing counterfactual for active agent " + std::to_string(i));
    }
}

}  // namespace

CreditOutcome equal_split(double team_reward, const std::vector<bool>& active) {
    const std::size_t na = count_active(active);
    if (na == 0) throw InvalidArgument("equal_split: no active agents");
    std::vector<double> c(active.size(), 0.0);
    for (std::size_t i = 0; i < active.size(); ++i) {
        if (active[i]) c[i] = 1.0 / static_cast<double>(na);
    }
    return from_contributions(team_reward, std::move(c));
}

CreditOutcome diff_rewards_da(double team_reward, std::span<const std::optional<double>> counterfactuals,
                              double gamma_credit, const std::vector<bool>& active) {
    require_counterfactuals(counterfactuals, active);
    if (!(gamma_credit > 0.0)) throw InvalidArgument("diff_rewards_da: gamma_credit must be > 0");
    const std::size_t na = count_active(active);
    if (na == 0) throw InvalidArgument("diff_rewards_da: no active agents");

    double lo = INFINITY, hi = -INFINITY, sum = 0.0;
    for (std::size_t i = 0; i < active.size(); ++i) {
        if (!active[i]) continue;
        const double r = *counterfactuals[i];
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        sum += r;
    }
    const double spread = hi - lo;
    if (!(spread > 0.0)) return equal_split(team_reward, active);

    const double mean = sum / static_cast<double>(na);
    std::vector<double> c(active.size(), 0.0);
    for (std::size_t i = 0; i < active.size(); ++i) {
        if (!active[i]) continue;
        const double deviation = (*counterfactuals[i] - mean) / spread;
        c[i] = 1.0 / static_cast<double>(na) - deviation / gamma_credit;
    }
    return from_contributions(team_reward, std::move(c));
}

CreditOutcome diff_rewards_gt(double team_reward, std::span<const std::optional<double>> counterfactuals,
                              const std::vector<bool>& active) {
    require_counterfactuals(counterfactuals, active);
    const std::size_t na = count_active(active);
    if (na == 0) throw InvalidArgument("diff_rewards_gt: no active agents");
    if (na == 1) return equal_split(team_reward, active);

    double total = 0.0;
    for (std::size_t i = 0; i < active.size(); ++i) {
        if (active[i]) total += *counterfactuals[i];
    }
    if (total == 0.0) return equal_split(team_reward, active);

    std::vector<double> c(active.size(), 0.0);
    for (std::size_t i = 0; i < active.size(); ++i) {
        if (active[i]) c[i] = (1.0 - *counterfactuals[i] / total) / static_cast<double>(na - 1);
    }
    return from_contributions(team_reward, std::move(c));
}

CreditOutcome assign_credit(const CreditConfig& config, const StepOutcome& outcome) {
    if (count_active(outcome.acted) == 0) {
        return CreditOutcome{std::vector<double>(outcome.acted.size(), 0.0), std::vector<double>(outcome.acted.size(), 0.0)};
    }
    switch (config.strategy) {
        case CreditStrategy::equal:
            return equal_split(outcome.team_reward, outcome.acted);
        case CreditStrategy::diff_da:
            return diff_rewards_da(outcome.team_reward, outcome.counterfactuals, config.gamma_credit, outcome.acted);
        case CreditStrategy::diff_gt:
            return diff_rewards_gt(outcome.team_reward, outcome.counterfactuals, outcome.acted);
    }
    throw InvalidArgument("unknown credit strategy");
}

}  // namespace plume_scout
