#include "plume_scout/agent/replay.hpp"

#include <algorithm>
#include <unordered_set>

#include "plume_scout/errors.hpp"

namespace plume_scout::agent {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw InvalidArgument("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
    } else {
        items_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, std::mt19937_64& rng) const {
    const std::size_t n = items_.size();
    count = std::min(count, n);
    std::vector<std::size_t> out;
    out.reserve(count);
    if (count == 0) return out;
    // Floyd's algorithm: exactly `count` draws, no replacement.
    std::unordered_set<std::size_t> seen;
    for (std::size_t j = n - count; j < n; ++j) {
        std::uniform_int_distribution<std::size_t> pick(0, j);
        const std::size_t r = pick(rng);
        const std::size_t chosen = seen.insert(r).second ? r : j;
        if (chosen == j) seen.insert(j);
        out.push_back(chosen);
    }
    return out;
}

}  // namespace plume_scout::agent
