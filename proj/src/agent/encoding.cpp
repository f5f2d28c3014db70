#include "plume_scout/agent/encoding.hpp"

#include <cmath>

#include "plume_scout/errors.hpp"

namespace plume_scout::agent {

StateEncoder::StateEncoder(const GridSpec& grid, int num_agents, double background_mean, double background_std)
    : grid_(grid), num_agents_(num_agents), mean_(background_mean), std_(background_std) {
    if (num_agents_ < 1) throw InvalidArgument("encoder needs at least one agent");
    if (!(std_ > 0.0) || !std::isfinite(std_)) throw InvalidScenario("background standard deviation must be > 0");
}

StateEncoder StateEncoder::for_scenario(const Scenario& scenario, int num_agents) {
    return StateEncoder(scenario.spec.grid, num_agents, scenario.background.mean(), scenario.background.stddev());
}

Eigen::Index StateEncoder::size() const noexcept {
    return static_cast<Eigen::Index>(grid_.size()) + 2 * num_agents_;
}

Eigen::VectorXd StateEncoder::encode(const EnvState& state) const {
    if (state.drones.size() != static_cast<std::size_t>(num_agents_)) {
        throw InvalidArgument("encoder configured for a different number of drones");
    }
    const auto n = static_cast<Eigen::Index>(grid_.size());
    Eigen::VectorXd out(size());
    out.head(n) = (state.analysis.values.array() - mean_) / std_;
    const double col_scale = grid_.cols > 1 ? 1.0 / static_cast<double>(grid_.cols - 1) : 0.0;
    const double row_scale = grid_.rows > 1 ? 1.0 / static_cast<double>(grid_.rows - 1) : 0.0;
    for (int i = 0; i < num_agents_; ++i) {
        const std::size_t cell = state.drones[static_cast<std::size_t>(i)].cell;
        out[n + 2 * i] = static_cast<double>(grid_.col_of(cell)) * col_scale;
        out[n + 2 * i + 1] = static_cast<double>(grid_.row_of(cell)) * row_scale;
    }
    return out;
}

}  // namespace plume_scout::agent
