#pragma once

#include <span>

#include <Eigen/Dense>

namespace vdmfpca {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Grid {0, step, 2 step, ...} up to `end`; `end` is appended when it is not
/// already (within round-off) a multiple of `step`.
VectorXd domain_grid(double end, double step);

/// Trapezoid-rule weights for an ascending, possibly non-uniform grid.
VectorXd trapezoid_weights(const VectorXd& grid);

/// Trapezoid integral of `values` sampled on `grid`.
double trapezoid(const VectorXd& grid, const VectorXd& values);

enum class Extrapolation { Constant, Linear };

/// Piecewise-linear interpolation of (x, y) at `at`. Beyond the first and last
/// knot the end value is held, or the end segment extended. `x` must be
/// strictly increasing.
VectorXd interpolate_linear(std::span<const double> x, std::span<const double> y, const VectorXd& at,
                            Extrapolation mode = Extrapolation::Constant);

/// Flip so that the entry of largest magnitude (first one on ties) is positive.
void fix_sign(Eigen::Ref<VectorXd> v);

struct SymmetricEigen {
    VectorXd values;   // descending
    MatrixXd vectors;  // columns, unit norm, sign-fixed
};

/// Full eigendecomposition of a symmetric matrix in descending order with the
/// sign convention of fix_sign applied to every column.
SymmetricEigen symmetric_eigen_desc(const MatrixXd& a);

/// Spectral projection onto the PSD cone: negative eigenvalues set to zero.
MatrixXd psd_repair(const MatrixXd& a);

/// Smallest count whose cumulative share of the positive eigenvalues reaches
/// `pve`, capped at `cap`. Never less than one when any eigenvalue exists.
int count_for_pve(const VectorXd& eigenvalues_desc, double pve, int cap);

}  // namespace vdmfpca
