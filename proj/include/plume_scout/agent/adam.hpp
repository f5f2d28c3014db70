#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace plume_scout::agent {

struct AdamConfig {
    double learning_rate = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::uint64_t step = 0;

    AdamState() = default;
    AdamState(Eigen::Index size, AdamConfig cfg);
};

/// One bias-corrected Adam update of params in place.
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads);

}  // namespace plume_scout::agent
