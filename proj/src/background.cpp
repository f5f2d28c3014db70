#include "plume_scout/background.hpp"

#include <cmath>
#include <random>

#include "plume_scout/errors.hpp"

namespace plume_scout {

void BackgroundSpec::validate() const {
    if (k < 1) throw InvalidArgument("background: k must be >= 1");
    if (!(bias >= 0.0) || !std::isfinite(bias)) throw InvalidArgument("background: bias must be >= 0");
}

Field sample_background(const Field& truth, const CovarianceModel& model, const BackgroundSpec& spec) {
    spec.validate();
    const Field biased(truth.grid, spec.bias * truth.values);
    const BackgroundCov generating = build_background_cov(biased, model);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto n = truth.values.size();
    Eigen::VectorXd accum = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd z(n);
    for (int draw = 0; draw < spec.k; ++draw) {
        for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
        accum.noalias() += generating.factor().triangularView<Eigen::Lower>() * z;
    }
    return Field(truth.grid, biased.values + accum / static_cast<double>(spec.k));
}

}  // namespace plume_scout
