#pragma once

#include <cstddef>
#include <vector>

#include "plume_scout/field.hpp"

namespace plume_scout {

struct PlumeSource {
    std::size_t row = 0;
    std::size_t col = 0;
    double amplitude = 0.0;     // ppm at the source cell
    double length_scale = 1.0;  // meters
};

/// Synthetic steady plume: isotropic Gaussian bumps over a constant floor.
struct PlumeSpec {
    std::vector<PlumeSource> sources;
    double background_level = 0.0;  // ppm

    void validate(const GridSpec& grid) const;
};

/// values[i] = background_level + sum_s amplitude_s * exp(-d(i, s)^2 / (2 length_scale_s^2))
Field gaussian_plume_field(const GridSpec& grid, const PlumeSpec& spec);

}  // namespace plume_scout
