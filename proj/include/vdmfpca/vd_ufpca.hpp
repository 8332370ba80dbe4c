#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vdmfpca/dataset.hpp"
#include "vdmfpca/pspline.hpp"

namespace vdmfpca {

/// Basis sizes and smoothing settings shared by all smooths of a fit.
struct SmootherConfig {
    int degree = 3;
    int mean_basis_t = 10;
    int mean_basis_T = 10;
    int cov_basis_t = 8;  // used for both time margins
    int cov_basis_T = 8;
    int score_basis_T = 10;
    PenaltySpec penalty;
    /// Include same-time products r_ij^2 in the covariance smooth (they carry
    /// the measurement-error variance).
    bool include_diagonal = false;
};

/// Number of retained components: a fixed count, or the smallest count whose
/// cumulative eigenvalue share reaches `pve`, capped at `cap`.
struct ComponentRule {
    std::optional<int> fixed;
    double pve = 0.95;
    int cap = 8;

    int resolve(const Eigen::VectorXd& eigenvalues_desc) const;
};

struct UfpcaConfig {
    SmootherConfig smoother;
    double grid_step = 1.0;
    ComponentRule components{std::nullopt, 0.95, 8};
};

/// Centered observations of one variable for one subject.
struct ResidualSeries {
    std::string subject_id;
    double domain_length = 0.0;
    std::vector<double> time;
    std::vector<double> value;
};

using CenteredData = std::vector<ResidualSeries>;

/// Eigenpairs of the smoothed covariance at a single domain length, on the
/// grid {0, step, ..., T}. Columns of `functions` are trapezoid-orthonormal.
struct Eigenbasis {
    double domain_length = 0.0;
    Eigen::VectorXd grid;
    Eigen::VectorXd weights;
    Eigen::VectorXd eigenvalues;  // descending, clipped at 0
    Eigen::MatrixXd functions;    // grid.size() x K
};

/// Smooth mu(t, T) of the pooled (t_ij, T_i, x_ij). When every subject shares
/// one domain length the T margin is dropped and mu depends on t only.
SmoothSurface estimate_mean(const FunctionalDataset& data, const std::string& variable, const SmootherConfig& config);

/// Mean surface value at (t, T); handles the fixed-domain (t-only) surface.
double mean_at(const SmoothSurface& mean, double t, double domain_length);

CenteredData center(const FunctionalDataset& data, const std::string& variable, const SmoothSurface& mean);

/// Smooth gamma(t, s, T) of within-subject residual products, symmetrized in
/// (t, s). Fixed-domain data give a (t, s) surface.
SmoothSurface estimate_covariance(const CenteredData& residuals, const SmootherConfig& config);

/// gamma(., ., T) on `grid`, exactly symmetric.
Eigen::MatrixXd covariance_on_grid(const SmoothSurface& cov, const Eigen::VectorXd& grid, double domain_length);

/// Quadrature-weighted eigendecomposition of gamma(., ., T). `rule` sets K.
Eigenbasis eigendecompose_at(const SmoothSurface& cov, double domain_length, double grid_step,
                             const ComponentRule& rule);

/// Trapezoid projections of each subject's residual (linearly interpolated
/// onto the eigen-grid) on the eigenfunctions at that subject's T.
Eigen::MatrixXd compute_scores(const CenteredData& residuals, const std::map<double, Eigenbasis>& bases);

/// Univariate variable-domain FPCA of one variable.
class UnivariateVdFpcaFit {
public:
    const std::string& variable() const { return variable_; }
    const SmoothSurface& mean_surface() const { return mean_; }
    const SmoothSurface& cov_surface() const { return cov_; }
    int num_components() const { return num_components_; }
    double grid_step() const { return grid_step_; }
    const std::vector<std::string>& subject_ids() const { return subject_ids_; }
    const std::vector<double>& domain_lengths() const { return domain_lengths_; }
    /// N x K
    const Eigen::MatrixXd& scores() const { return scores_; }
    const std::map<double, Eigenbasis>& eigenbases() const { return bases_; }

    /// Cached basis for a subject's T, or a fresh decomposition otherwise.
    Eigenbasis eigen_at(double domain_length) const;

    friend UnivariateVdFpcaFit fit_vd_ufpca(const FunctionalDataset&, const std::string&, const UfpcaConfig&);

private:
    std::string variable_;
    SmoothSurface mean_;
    SmoothSurface cov_;
    int num_components_ = 0;
    double grid_step_ = 1.0;
    std::vector<std::string> subject_ids_;
    std::vector<double> domain_lengths_;
    Eigen::MatrixXd scores_;
    std::map<double, Eigenbasis> bases_;
};

/// Median of the domain lengths (mean of the two middle values for even N).
double median_domain_length(std::vector<double> lengths);

UnivariateVdFpcaFit fit_vd_ufpca(const FunctionalDataset& data, const std::string& variable,
                                 const UfpcaConfig& config);

}  // namespace vdmfpca
