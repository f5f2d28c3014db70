#pragma once

#include <optional>
#include <span>
#include <vector>

namespace plume_scout {

struct StepOutcome;

enum class CreditStrategy { equal, diff_da, diff_gt };

struct CreditConfig {
    CreditStrategy strategy = CreditStrategy::equal;
    double gamma_credit = 1.0;  // deviation amplitude in the DA difference rewards; usually 1/N

    void validate() const;
};

/// Per-agent split of a team reward: rewards[i] = team_reward * contributions[i].
struct CreditOutcome {
    std::vector<double> contributions;
    std::vector<double> rewards;
};

/// Active agents share R evenly; inactive agents get 0.
CreditOutcome equal_split(double team_reward, const std::vector<bool>& active);

/// c_i = 1/N_a - (1/gamma) (r_-i - mean r_-k) / (max r_-k - min r_-k) over active agents.
/// A zero spread collapses to the equal split. Contributions are not clipped.
CreditOutcome diff_rewards_da(double team_reward, std::span<const std::optional<double>> counterfactuals,
                              double gamma_credit, const std::vector<bool>& active);

/// c_i = (1 - r_-i / sum_j r_-j) / (N_a - 1) over active agents; a single agent
/// takes everything, a zero sum collapses to the equal split.
CreditOutcome diff_rewards_gt(double team_reward, std::span<const std::optional<double>> counterfactuals,
                              const std::vector<bool>& active);

/// Applies the configured strategy to one environment step. Steps in which no
/// agent acted yield all-zero rewards.
CreditOutcome assign_credit(const CreditConfig& config, const StepOutcome& outcome);

}  // namespace plume_scout
