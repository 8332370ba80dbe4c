#pragma once

#include <span>

#include <Eigen/Dense>

namespace vdmfpca {

/// Root mean squared difference over the evaluated points of one subject.
double rmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate);

/// Mean over subjects of per-subject RMSE. Each subject's truth and
/// reconstruction are given on the same evaluated points.
double armse_x(std::span<const Eigen::VectorXd> truth, std::span<const Eigen::VectorXd> reconstruction);

/// Mean over subjects of the RMSE between true and estimated eigenfunction
/// `component` (1-based). Matrices are points x components; `times` are the
/// evaluated points, used for the sign-alignment integral.
double armse_pc(std::span<const Eigen::MatrixXd> truth, std::span<const Eigen::MatrixXd> estimate,
                std::span<const Eigen::VectorXd> times, int component);

/// The estimate flipped, if needed, so that its integral against the truth is >= 0.
Eigen::VectorXd align_sign(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate,
                           const Eigen::VectorXd& times);

struct CellSummary {
    double mean = 0.0;
    double sd = 0.0;  // n - 1 denominator
    std::size_t n = 0;
};

CellSummary summarize(std::span<const double> values);

/// Average ranks (1-based), ties share the mean rank.
Eigen::VectorXd average_ranks(std::span<const double> values);

struct SpearmanResult {
    double rho = 0.0;
    double p_value = 1.0;
};

/// Spearman rank correlation with a two-sided p-value from the t approximation
/// with n - 2 degrees of freedom. Throws ArgumentError for constant input or n < 3.
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

}  // namespace vdmfpca
