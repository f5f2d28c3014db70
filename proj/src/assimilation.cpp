#include "plume_scout/assimilation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plume_scout/errors.hpp"

namespace plume_scout {

void CovarianceModel::validate() const {
    auto check = [](double v, bool ok, const char* what) {
        if (!std::isfinite(v) || !ok) throw InvalidArgument(std::string("covariance model: ") + what);
    };
    check(alpha, alpha >= 0.0, "alpha must be >= 0");
    check(delta, delta >= 0.0, "delta must be >= 0");
    check(v0, v0 >= 0.0, "v0 must be >= 0");
    check(jitter, jitter > 0.0, "jitter must be > 0");
}

Eigen::MatrixXd correlation_matrix(const GridSpec& grid, double delta) {
    if (!(delta >= 0.0)) throw InvalidArgument("correlation_matrix: delta must be >= 0");
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd W(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        W(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double w = std::exp(-delta * cell_distance(grid, static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
            W(i, j) = w;
            W(j, i) = w;
        }
    }
    return W;
}

Eigen::VectorXd sigma_from_background(const Eigen::VectorXd& x_b, double alpha) {
    if (!(alpha >= 0.0)) throw InvalidArgument("sigma_from_background: alpha must be >= 0");
    return alpha * x_b.cwiseAbs();
}

BackgroundCov::BackgroundCov(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
    if (matrix_.rows() != matrix_.cols()) throw InvalidArgument("background covariance must be square");
    const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
    if ((matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw NumericError("background covariance is not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(matrix_);
    if (llt.info() != Eigen::Success) {
        throw NumericError("background covariance is not positive-definite; increase the jitter");
    }
    factor_ = llt.matrixL();
}

BackgroundCov background_cov(const Eigen::MatrixXd& W, const Eigen::VectorXd& sigma, double jitter) {
    if (W.rows() != sigma.size() || W.cols() != sigma.size()) {
        throw InvalidArgument("background_cov: correlation is " + std::to_string(W.rows()) + "x" +
                              std::to_string(W.cols()) + " but sigma has " + std::to_string(sigma.size()) +
                              " entries");
    }
    if (!(jitter > 0.0)) throw InvalidArgument("background_cov: jitter must be > 0");
    Eigen::MatrixXd B = sigma.asDiagonal() * W * sigma.asDiagonal();
    B.diagonal().array() += jitter;
    return BackgroundCov(std::move(B));
}

BackgroundCov build_background_cov(const Field& reference, const CovarianceModel& model) {
    model.validate();
    return background_cov(correlation_matrix(reference.grid, model.delta),
                          sigma_from_background(reference.values, model.alpha), model.jitter);
}

CollapsedObservations collapse_observations(std::span<const Observation> obs, std::size_t n) {
    std::vector<std::pair<std::size_t, double>> sorted;
    sorted.reserve(obs.size());
    for (const auto& o : obs) {
        if (o.cell >= n) {
            throw InvalidArgument("observation at cell " + std::to_string(o.cell) + " outside grid of " +
                                  std::to_string(n) + " cells");
        }
        sorted.emplace_back(o.cell, o.value);
    }
    // Sorting on (cell, value) makes the duplicate averages independent of input order.
    std::sort(sorted.begin(), sorted.end());

    CollapsedObservations out;
    std::vector<double> values;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < sorted.size() && sorted[j].first == sorted[i].first) sum += sorted[j++].second;
        out.cells.push_back(static_cast<Eigen::Index>(sorted[i].first));
        values.push_back(sum / static_cast<double>(j - i));
        i = j;
    }
    out.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    return out;
}

Field blue_analysis(const Field& x_b, const BackgroundCov& B, std::span<const Observation> obs, double v0) {
    if (B.size() != x_b.size()) throw InvalidArgument("blue_analysis: B and background sizes differ");
    if (!(v0 >= 0.0)) throw InvalidArgument("blue_analysis: v0 must be >= 0");
    const CollapsedObservations y = collapse_observations(obs, x_b.size());
    if (y.cells.empty()) return x_b;

    const auto m = static_cast<Eigen::Index>(y.cells.size());
    const Eigen::MatrixXd BHt = B.matrix()(Eigen::all, y.cells);
    Eigen::MatrixXd S = BHt(y.cells, Eigen::all);
    S.diagonal().array() += v0;
    const Eigen::VectorXd innovation = y.values - x_b.values(y.cells);

    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) {
        throw NumericError("blue_analysis: innovation covariance (" + std::to_string(m) + "x" + std::to_string(m) +
                           ") is not positive-definite");
    }
    const Eigen::VectorXd weights = llt.solve(innovation);
    Eigen::VectorXd xa = x_b.values + BHt * weights;
    if (!xa.allFinite()) throw NumericError("blue_analysis: non-finite analysis");
    return Field(x_b.grid, std::move(xa));
}

Field analysis_with_exclusion(const Field& x_b, const BackgroundCov& B, std::span<const Observation> obs, double v0,
                              std::span<const ObservationTag> excluded) {
    ObservationSet kept;
    kept.reserve(obs.size());
    for (const auto& o : obs) {
        const bool drop = std::any_of(excluded.begin(), excluded.end(),
                                      [&](const ObservationTag& t) { return t.agent == o.agent && t.step == o.step; });
        if (!drop) kept.push_back(o);
    }
    return blue_analysis(x_b, B, kept, v0);
}

}  // namespace plume_scout
