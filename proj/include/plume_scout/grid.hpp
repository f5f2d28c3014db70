#pragma once

#include <cstddef>

namespace plume_scout {

struct CellCenter {
    double x = 0.0;  // meters along columns
    double y = 0.0;  // meters along rows
};

// Regular axis-aligned grid. Cell i sits at (row = i / cols, col = i % cols).
struct GridSpec {
    std::size_t rows = 1;
    std::size_t cols = 1;
    double spacing = 1.0;  // meters between adjacent cell centers

    std::size_t size() const noexcept { return rows * cols; }
    std::size_t row_of(std::size_t cell) const noexcept { return cell / cols; }
    std::size_t col_of(std::size_t cell) const noexcept { return cell % cols; }
    std::size_t index(std::size_t row, std::size_t col) const noexcept { return row * cols + col; }
    CellCenter center(std::size_t cell) const;
    bool contains(std::size_t cell) const noexcept { return cell < size(); }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Validated constructor; throws InvalidArgument on a non-positive dimension or spacing.
GridSpec make_grid(long long rows, long long cols, double spacing);

/// Euclidean distance between the centers of two cells, in meters.
double cell_distance(const GridSpec& grid, std::size_t i, std::size_t j);

}  // namespace plume_scout
