#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "plume_scout/field.hpp"

namespace plume_scout {

/// Error-covariance parameters.
///   alpha  - slope of background-error std against background value
///   delta  - spatial attenuation of error correlation (1/m)
///   v0     - observation-error variance (ppm^2)
///   jitter - diagonal regularizer added to B (ppm^2)
struct CovarianceModel {
    double alpha = 0.3;
    double delta = 0.01;
    double v0 = 0.0;
    double jitter = 1e-6;

    void validate() const;
};

/// W_ij = exp(-delta * d_ij)
Eigen::MatrixXd correlation_matrix(const GridSpec& grid, double delta);

/// sigma_i = alpha * |x_b[i]|
Eigen::VectorXd sigma_from_background(const Eigen::VectorXd& x_b, double alpha);

/// Symmetric positive-definite background-error covariance together with its
/// Cholesky factor. Construction fails with NumericError if B is not SPD.
class BackgroundCov {
public:
    explicit BackgroundCov(Eigen::MatrixXd matrix);

    const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
    /// Lower-triangular L with L L^T = B.
    const Eigen::MatrixXd& factor() const noexcept { return factor_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }

private:
    Eigen::MatrixXd matrix_;
    Eigen::MatrixXd factor_;
};

/// B_ij = W_ij sigma_i sigma_j + jitter [i == j]
BackgroundCov background_cov(const Eigen::MatrixXd& W, const Eigen::VectorXd& sigma, double jitter);

/// B for a given reference field (background or biased truth) under a model.
BackgroundCov build_background_cov(const Field& reference, const CovarianceModel& model);

/// One sensed value, tagged with the agent and step that produced it.
struct Observation {
    std::size_t cell = 0;
    double value = 0.0;
    int agent = -1;
    int step = 0;
};

using ObservationSet = std::vector<Observation>;

struct ObservationTag {
    int agent = -1;
    int step = 0;
};

/// Observations collapsed to unique cells (ascending), duplicates averaged.
struct CollapsedObservations {
    std::vector<Eigen::Index> cells;
    Eigen::VectorXd values;
};

CollapsedObservations collapse_observations(std::span<const Observation> obs, std::size_t n);

/// x_a = x_b + B H^T (H B H^T + v0 I)^-1 (y - H x_b), solved through a
/// Cholesky factorization of the m x m innovation covariance.
Field blue_analysis(const Field& x_b, const BackgroundCov& B, std::span<const Observation> obs, double v0);

/// BLUE over obs with the entries carrying any of the excluded tags removed.
Field analysis_with_exclusion(const Field& x_b, const BackgroundCov& B, std::span<const Observation> obs, double v0,
                              std::span<const ObservationTag> excluded);

}  // namespace plume_scout
