#pragma once

#include <Eigen/Dense>

#include "plume_scout/envsim.hpp"

namespace plume_scout::agent {

/// Shared state seen by every agent: the standardized analysis followed by each
/// drone's (col, row) scaled to [0, 1]. Budgets are deliberately not encoded.
class StateEncoder {
public:
    StateEncoder(const GridSpec& grid, int num_agents, double background_mean, double background_std);
    static StateEncoder for_scenario(const Scenario& scenario, int num_agents);

    Eigen::Index size() const noexcept;
    Eigen::VectorXd encode(const EnvState& state) const;

    double background_mean() const noexcept { return mean_; }
    double background_std() const noexcept { return std_; }

private:
    GridSpec grid_;
    int num_agents_;
    double mean_;
    double std_;
};

}  // namespace plume_scout::agent
