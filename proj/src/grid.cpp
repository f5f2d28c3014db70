#include "plume_scout/grid.hpp"

#include <cmath>
#include <string>

#include "plume_scout/errors.hpp"

namespace plume_scout {

CellCenter GridSpec::center(std::size_t cell) const {
    if (!contains(cell)) {
        throw InvalidArgument("cell index " + std::to_string(cell) + " outside grid of " +
                              std::to_string(size()) + " cells");
    }
    return {static_cast<double>(col_of(cell)) * spacing, static_cast<double>(row_of(cell)) * spacing};
}

GridSpec make_grid(long long rows, long long cols, double spacing) {
    if (rows < 1 || cols < 1) {
        throw InvalidArgument("grid dimensions must be positive, got " + std::to_string(rows) + "x" +
                              std::to_string(cols));
    }
    if (!(spacing > 0.0) || !std::isfinite(spacing)) {
        throw InvalidArgument("grid spacing must be positive and finite");
    }
    return GridSpec{static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), spacing};
}

double cell_distance(const GridSpec& grid, std::size_t i, std::size_t j) {
    const CellCenter a = grid.center(i);
    const CellCenter b = grid.center(j);
    return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace plume_scout
