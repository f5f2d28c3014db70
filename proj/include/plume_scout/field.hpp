#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "plume_scout/grid.hpp"

namespace plume_scout {

/// Concentration map over a grid (ppm), indexed by cell. Used for truth,
/// background and analysis alike; only truth fields are required to be >= 0.
struct Field {
    GridSpec grid;
    Eigen::VectorXd values;

    Field() = default;
    Field(GridSpec g, Eigen::VectorXd v);

    std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
    double mean() const { return values.mean(); }
    /// Population standard deviation over cells.
    double stddev() const;
};

Field uniform_field(const GridSpec& grid, double value);

/// Mean absolute error between two fields on the same grid.
double mae(const Field& a, const Field& b);

/// Parses a row-major CSV of rows x cols numbers. Lines starting with '#' and
/// blank lines are ignored.
Field load_field_csv(std::string_view text, const GridSpec& grid);
Field load_field_csv_file(const std::string& path, const GridSpec& grid);

/// Inverse of load_field_csv; values are printed with round-trip precision.
std::string write_field_csv(const Field& field);

}  // namespace plume_scout
