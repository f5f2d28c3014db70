#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "plume_scout/agent/adam.hpp"
#include "plume_scout/agent/c51.hpp"
#include "plume_scout/agent/qnet.hpp"
#include "plume_scout/agent/replay.hpp"

namespace plume_scout::agent {

struct C51Config {
    AtomSupport support;
    Eigen::Index hidden1 = 128;
    Eigen::Index hidden2 = 64;
    double discount = 0.99;
    std::size_t batch_size = 128;
    std::size_t buffer_capacity = 300000;
    std::uint64_t target_period = 3;  // gradient updates between hard target copies
    AdamConfig adam;
};

/// One independent learner: online and target networks, optimizer state, a
/// private replay buffer and the RNG used for minibatch sampling.
class C51Agent {
public:
    C51Agent(Eigen::Index input_size, Eigen::Index num_actions, const C51Config& config, std::uint64_t seed);

    const C51Config& config() const noexcept { return config_; }
    const QNetwork& online() const noexcept { return online_; }
    const QNetwork& target() const noexcept { return target_; }
    QNetwork& online_mut() noexcept { return online_; }
    const AdamState& optimizer() const noexcept { return adam_; }
    const ReplayBuffer& replay() const noexcept { return replay_; }

    int act(const Eigen::VectorXd& encoding, const ActionMask& mask, double epsilon, std::mt19937_64& rng) const {
        return select_action(online_, config_.support, encoding, mask, epsilon, rng);
    }

    void remember(Transition t) { replay_.push(std::move(t)); }

    /// One minibatch update. Returns the loss, or nothing when the buffer holds
    /// fewer transitions than a minibatch. Syncs the target every target_period updates.
    std::optional<double> train_step();

    /// Target parameters become a copy of the online parameters.
    void sync_target();

    std::uint64_t gradient_updates() const noexcept { return gradient_updates_; }
    std::uint64_t target_syncs() const noexcept { return target_syncs_; }

    /// Bootstrapped targets for a set of replayed transitions (batch x atoms).
    Eigen::MatrixXd compute_targets(const std::vector<std::size_t>& indices) const;

    void save(const std::string& path) const;
    static C51Agent load(const std::string& path);

private:
    C51Agent(C51Config config, QNetwork online, QNetwork target, AdamState adam, std::mt19937_64 rng);

    C51Config config_;
    QNetwork online_;
    QNetwork target_;
    AdamState adam_;
    ReplayBuffer replay_;
    std::mt19937_64 rng_;
    std::uint64_t gradient_updates_ = 0;
    std::uint64_t target_syncs_ = 0;
};

}  // namespace plume_scout::agent
