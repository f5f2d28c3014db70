#pragma once

#include <cstdint>

#include "plume_scout/assimilation.hpp"
#include "plume_scout/field.hpp"

namespace plume_scout {

/// How the simulated background is derived from the truth.
struct BackgroundSpec {
    int k = 5;           // simulations averaged
    double bias = 1.0;   // multiplicative factor applied to truth before adding noise
    std::uint64_t seed = 7;

    void validate() const;
};

/// x_b = mean over k draws of (bias * x_t + eps), eps ~ N(0, B) where B is
/// built from `model` against bias * x_t. Deterministic in spec.seed.
Field sample_background(const Field& truth, const CovarianceModel& model, const BackgroundSpec& spec);

}  // namespace plume_scout
