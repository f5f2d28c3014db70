#pragma once

#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "plume_scout/agent/qnet.hpp"
#include "plume_scout/envsim.hpp"

namespace plume_scout::agent {

/// Fixed return support z_j = v_min + j * (v_max - v_min) / (num_atoms - 1).
struct AtomSupport {
    int num_atoms = 51;
    double v_min = -2.0;
    double v_max = 2.0;

    void validate() const;
    double spacing() const noexcept { return (v_max - v_min) / (num_atoms - 1); }
    double atom(int j) const noexcept { return v_min + j * spacing(); }
    Eigen::VectorXd atoms() const;
};

/// Q(a) = sum_j z_j p_j(a) for every action.
Eigen::VectorXd action_values(const QNetwork& net, const AtomSupport& support, const Eigen::VectorXd& encoding);

/// Index of the largest value among allowed entries; ties go to the lowest index.
int masked_argmax(const Eigen::Ref<const Eigen::VectorXd>& values, const ActionMask& mask);

/// Epsilon-greedy over the feasible actions. Throws InvalidArgument on an empty mask.
int select_action(const QNetwork& net, const AtomSupport& support, const Eigen::VectorXd& encoding,
                  const ActionMask& mask, double epsilon, std::mt19937_64& rng);

/// Categorical Bellman projection. next_dists holds one distribution per row
/// (batch x num_atoms); rows of done samples are ignored.
Eigen::MatrixXd project_target(std::span<const double> rewards, std::span<const bool> dones,
                               const Eigen::MatrixXd& next_dists, const AtomSupport& support, double discount);

struct LossAndGrads {
    double loss = 0.0;
    Eigen::VectorXd grads;  // same layout as QNetwork::params()
};

inline constexpr double kProbabilityFloor = 1e-12;

/// Mean cross-entropy between targets (batch x num_atoms) and the predicted
/// distribution of each sample's taken action, with its exact gradient.
/// encodings: input x batch. Throws NumericError on a non-finite loss.
LossAndGrads loss_and_grads(const QNetwork& net, const Eigen::MatrixXd& encodings, std::span<const int> actions,
                            const Eigen::MatrixXd& targets);

/// Loss only; used by finite-difference checks.
double c51_loss(const QNetwork& net, const Eigen::MatrixXd& encodings, std::span<const int> actions,
                const Eigen::MatrixXd& targets);

}  // namespace plume_scout::agent
