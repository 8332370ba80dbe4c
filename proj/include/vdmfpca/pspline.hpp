#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace vdmfpca {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One margin of a tensor-product B-spline basis. Knots are equally spaced
/// over [domain_lo, domain_hi] and extended by `degree` intervals on each side.
struct BasisSpec {
    int degree = 3;
    int num_basis = 10;
    double domain_lo = 0.0;
    double domain_hi = 1.0;

    void validate() const;
    int num_intervals() const { return num_basis - degree; }
    double spacing() const { return (domain_hi - domain_lo) / num_intervals(); }
    bool contains(double x) const { return x >= domain_lo && x <= domain_hi; }
};

/// Margin spanning [min, max] of `coords`, widened by a 1e-9 relative slack.
BasisSpec margin_for(std::span<const double> coords, int num_basis, int degree = 3);

/// 20 log-spaced values over [1e-4, 1e6].
std::vector<double> default_lambda_grid();
std::vector<double> log_lambda_grid(double lo, double hi, int n);

struct PenaltySpec {
    int order = 2;
    std::vector<double> lambda_grid = default_lambda_grid();

    void validate() const;
};

/// Writes the degree+1 non-zero basis values at x into `out` and returns the
/// index of the first one. Throws DomainError outside the margin.
int basis_values(const BasisSpec& spec, double x, std::span<double> out);

/// Dense n_points x num_basis design matrix.
MatrixXd bspline_design(const BasisSpec& spec, std::span<const double> points);

/// D^T D for the order-th difference operator D.
MatrixXd difference_penalty(int num_basis, int order);

/// Sum over margins of I x ... x P_d x ... x I (row-major flattening, first
/// margin slowest).
MatrixXd tensor_penalty(const std::vector<BasisSpec>& margins, int order);

/// A fitted tensor-product P-spline. Immutable after construction.
class SmoothSurface {
public:
    SmoothSurface() = default;
    SmoothSurface(std::vector<BasisSpec> margins, VectorXd coefficients, std::vector<double> selected_lambda,
                  double edf, double gcv);

    int dims() const { return static_cast<int>(margins_.size()); }
    const std::vector<BasisSpec>& margins() const { return margins_; }
    const VectorXd& coefficients() const { return coefficients_; }
    const std::vector<double>& selected_lambda() const { return selected_lambda_; }
    double edf() const { return edf_; }
    double gcv() const { return gcv_; }

    /// When set, evaluation returns (f(x) + f(x with axes a,b swapped)) / 2,
    /// so the surface is exactly symmetric in those two coordinates.
    void set_exchangeable(int axis_a, int axis_b);
    std::optional<std::pair<int, int>> exchangeable() const { return exchangeable_; }

    bool contains(std::span<const double> point) const;
    double evaluate(std::span<const double> point) const;
    /// One point per row.
    VectorXd evaluate(const MatrixXd& points) const;

private:
    double evaluate_raw(std::span<const double> point) const;

    std::vector<BasisSpec> margins_;
    VectorXd coefficients_;
    std::vector<double> selected_lambda_;
    double edf_ = 0.0;
    double gcv_ = 0.0;
    std::optional<std::pair<int, int>> exchangeable_;
};

VectorXd eval_surface(const SmoothSurface& surface, const MatrixXd& points);

/// Accumulated weighted least-squares system B^T W B c = B^T W y.
struct NormalEquations {
    MatrixXd gram;
    VectorXd rhs;
    double yty = 0.0;     // y^T W y
    double n_obs = 0.0;   // number of observations entering GCV
};

/// GCV score, edf and RSS at every grid value, in grid order.
struct SmoothingPath {
    std::vector<double> lambda;
    std::vector<double> gcv;
    std::vector<double> edf;
    std::vector<double> rss;
    std::size_t selected = 0;
};

/// Penalized fit from pre-accumulated normal equations; GCV over the grid with
/// one lambda shared by all margins. `exact_rss`, when given, replaces the
/// algebraic residual sum of squares.
SmoothSurface fit_normal_equations(const NormalEquations& system, const std::vector<BasisSpec>& margins,
                                   const PenaltySpec& penalty,
                                   const std::function<double(const VectorXd&)>& exact_rss = {},
                                   SmoothingPath* path = nullptr);

/// Penalized weighted least squares on scattered d-dimensional points (one per
/// row). `weights` may be empty.
SmoothSurface fit_surface(const MatrixXd& points, std::span<const double> values, std::span<const double> weights,
                          const std::vector<BasisSpec>& margins, const PenaltySpec& penalty,
                          SmoothingPath* path = nullptr);

}  // namespace vdmfpca
