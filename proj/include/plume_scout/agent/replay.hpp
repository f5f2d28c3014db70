#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "plume_scout/envsim.hpp"

namespace plume_scout::agent {

struct Transition {
    Eigen::VectorXd state;
    int action = 0;
    double reward = 0.0;  // credited and normalized
    Eigen::VectorXd next_state;
    bool done = false;
    ActionMask next_mask;  // feasibility in next_state, for the greedy bootstrap
};

/// Fixed-capacity ring buffer; the oldest transition is overwritten once full.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const noexcept { return items_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    const Transition& operator[](std::size_t i) const { return items_[i]; }

    /// min(count, size()) distinct indices, uniformly at random.
    std::vector<std::size_t> sample_indices(std::size_t count, std::mt19937_64& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> items_;
};

}  // namespace plume_scout::agent
