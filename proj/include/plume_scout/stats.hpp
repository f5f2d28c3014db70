#pragma once

#include <span>

namespace plume_scout::stats {

double mean(std::span<const double> xs);
/// Population standard deviation (0 for fewer than two samples).
double population_std(std::span<const double> xs);
/// Unbiased sample standard deviation (0 for fewer than two samples).
double sample_std(std::span<const double> xs);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

/// Two-sided Student-t confidence interval for the mean. With one sample the
/// interval collapses to the sample itself.
Interval student_t_interval(std::span<const double> xs, double confidence = 0.95);

/// Upper bound of the one-sided Student-t interval on the mean.
double student_t_upper(std::span<const double> xs, double confidence = 0.95);

}  // namespace plume_scout::stats
