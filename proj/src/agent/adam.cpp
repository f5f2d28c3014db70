#include "plume_scout/agent/adam.hpp"

#include <cmath>

#include "plume_scout/errors.hpp"

namespace plume_scout::agent {

AdamState::AdamState(Eigen::Index size, AdamConfig cfg)
    : config(cfg), m(Eigen::VectorXd::Zero(size)), v(Eigen::VectorXd::Zero(size)) {}

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw InvalidArgument("adam_step: parameter, gradient and moment sizes differ");
    }
    const auto& c = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);

    state.m = c.beta1 * state.m + (1.0 - c.beta1) * grads;
    state.v = c.beta2 * state.v + (1.0 - c.beta2) * grads.cwiseProduct(grads);
    params.array() -= c.learning_rate * (state.m.array() / correction1) /
                      ((state.v.array() / correction2).sqrt() + c.epsilon);
}

}  // namespace plume_scout::agent
