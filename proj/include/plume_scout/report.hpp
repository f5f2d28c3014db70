#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace plume_scout::report {

// Rows of learning_curve.csv (or sweep_runs.csv, whose extra columns are ignored).
struct CurveRow {
    std::string method;
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    double final_mae_mean = 0.0;
    double final_mae_std = 0.0;
};

struct SummaryRow {
    std::string method;
    double alpha = 0.0;
    double budget = 0.0;
    int n_agents = 0;
    double final_mae_mean = 0.0;
    double ci95_low = 0.0;
    double ci95_high = 0.0;
    int n_seeds = 0;
};

// Throw FormatError naming the 1-based line of the offending row.
std::vector<CurveRow> parse_learning_curve(std::string_view csv);
std::vector<SummaryRow> parse_summary(std::string_view csv);

struct BandPoint {
    std::uint64_t step;
    double mean;
    double std;
};

// Pools each checkpoint over seeds: the mean of seed means, and the std of
// the union of all evaluation episodes (each seed weighted equally).
std::map<std::string, std::vector<BandPoint>> aggregate_bands(const std::vector<CurveRow>& rows);

std::string learning_curve_svg(const std::vector<CurveRow>& rows);

// MAE against budget on a log10 axis, one series per (method, alpha, n_agents).
// Throws InvalidArgument on non-positive MAE.
std::string budget_svg(const std::vector<SummaryRow>& rows);

std::string summary_markdown(const std::vector<SummaryRow>& rows);

}  // namespace plume_scout::report
