#include "plume_scout/plume.hpp"

#include <cmath>
#include <string>

#include "plume_scout/errors.hpp"

namespace plume_scout {

void PlumeSpec::validate(const GridSpec& grid) const {
    if (!(background_level >= 0.0) || !std::isfinite(background_level)) {
        throw InvalidArgument("plume background level must be finite and >= 0");
    }
    for (std::size_t s = 0; s < sources.size(); ++s) {
        const auto& src = sources[s];
        const std::string tag = "plume source " + std::to_string(s) + ": ";
        if (src.row >= grid.rows || src.col >= grid.cols) throw InvalidArgument(tag + "outside grid");
        if (!(src.amplitude >= 0.0) || !std::isfinite(src.amplitude)) throw InvalidArgument(tag + "amplitude must be >= 0");
        if (!(src.length_scale > 0.0) || !std::isfinite(src.length_scale)) {
            throw InvalidArgument(tag + "length scale must be > 0");
        }
    }
}

Field gaussian_plume_field(const GridSpec& grid, const PlumeSpec& spec) {
    spec.validate(grid);
    Eigen::VectorXd values = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.size()), spec.background_level);
    for (const auto& src : spec.sources) {
        const std::size_t src_cell = grid.index(src.row, src.col);
        const double two_l2 = 2.0 * src.length_scale * src.length_scale;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double d = cell_distance(grid, i, src_cell);
            values[static_cast<Eigen::Index>(i)] += src.amplitude * std::exp(-d * d / two_l2);
        }
    }
    return Field(grid, std::move(values));
}

}  // namespace plume_scout
