#include "plume_scout/stats.hpp"

#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "plume_scout/errors.hpp"

namespace plume_scout::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw InvalidArgument("mean of an empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

namespace {

double sum_sq_dev(std::span<const double> xs) {
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return acc;
}

double t_quantile(std::size_t n, double p) {
    boost::math::students_t dist(static_cast<double>(n - 1));
    return boost::math::quantile(dist, p);
}

}  // namespace

double population_std(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    return std::sqrt(sum_sq_dev(xs) / static_cast<double>(xs.size()));
}

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    return std::sqrt(sum_sq_dev(xs) / static_cast<double>(xs.size() - 1));
}

Interval student_t_interval(std::span<const double> xs, double confidence) {
    const double m = mean(xs);
    if (xs.size() < 2) return {m, m};
    const double half = t_quantile(xs.size(), 0.5 + confidence / 2.0) * sample_std(xs) /
                        std::sqrt(static_cast<double>(xs.size()));
    return {m - half, m + half};
}

double student_t_upper(std::span<const double> xs, double confidence) {
    const double m = mean(xs);
    if (xs.size() < 2) return m;
    return m + t_quantile(xs.size(), confidence) * sample_std(xs) / std::sqrt(static_cast<double>(xs.size()));
}

}  // namespace plume_scout::stats
