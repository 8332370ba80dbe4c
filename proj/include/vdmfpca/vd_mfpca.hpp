#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vdmfpca/dataset.hpp"
#include "vdmfpca/pspline.hpp"
#include "vdmfpca/vd_ufpca.hpp"

namespace vdmfpca {

/// Per-subject concatenation of univariate scores, variable blocks in order.
struct StackedScores {
    std::vector<std::string> subject_ids;
    std::vector<double> domain_lengths;
    std::vector<std::string> variables;
    std::vector<int> block_offsets;  // size p + 1; block j spans [offsets[j], offsets[j+1])
    Eigen::MatrixXd scores;          // N x K+

    int total() const { return static_cast<int>(scores.cols()); }
    int block_size(std::size_t j) const { return block_offsets.at(j + 1) - block_offsets.at(j); }
};

StackedScores stack_scores(std::span<const UnivariateVdFpcaFit> fits);

/// Inverse of stack_scores: one N x K_j matrix per variable.
std::vector<Eigen::MatrixXd> split_scores(const StackedScores& stacked);

/// C(T) as K+(K+ + 1)/2 univariate smooths over T (upper triangle, row-major).
/// A constant model (all subjects share one T) stores the mean outer product.
class ScoreCovarianceModel {
public:
    ScoreCovarianceModel() = default;
    ScoreCovarianceModel(int dim, std::vector<SmoothSurface> upper, double t_lo, double t_hi);
    static ScoreCovarianceModel constant(const Eigen::MatrixXd& matrix, double domain_length);

    int dim() const { return dim_; }
    double t_lo() const { return t_lo_; }
    double t_hi() const { return t_hi_; }
    bool is_constant() const { return constant_.has_value(); }
    const std::vector<SmoothSurface>& elements() const { return upper_; }
    bool contains(double domain_length) const;

    /// Smoothed matrix before PSD repair; symmetric by construction.
    Eigen::MatrixXd raw_at(double domain_length) const;

private:
    int dim_ = 0;
    std::vector<SmoothSurface> upper_;
    double t_lo_ = 0.0;
    double t_hi_ = 0.0;
    std::optional<Eigen::MatrixXd> constant_;
};

/// Smooths [xi_i xi_i^T]_jk against T_i for every j <= k. With `center_scores`
/// each score is first centered by its own smooth over T.
ScoreCovarianceModel fit_score_covariance(const StackedScores& stacked, const SmootherConfig& config,
                                          bool center_scores = false);

/// PSD-repaired C(T). Throws DomainError outside the fitted T range.
Eigen::MatrixXd eval_score_covariance(const ScoreCovarianceModel& model, double domain_length);

struct MultivariateEigen {
    double domain_length = 0.0;
    Eigen::VectorXd values;   // descending, >= 0
    Eigen::MatrixXd vectors;  // K+ x M, orthonormal columns
};

MultivariateEigen multivariate_eigen_at(const ScoreCovarianceModel& model, double domain_length,
                                        const ComponentRule& rule);

/// rho_im = xi_i^T c_m(T_i); `vectors[i]` holds subject i's eigenvectors.
Eigen::MatrixXd multivariate_scores(const StackedScores& stacked, std::span<const Eigen::MatrixXd> vectors);

/// Psi_m^j(t, T) = sum_l [c_m]_l(block j) psi_l^j(t, T) on each variable's eigen-grid.
struct MultivariateEigenfunctions {
    double domain_length = 0.0;
    std::vector<Eigen::VectorXd> grids;      // per variable
    std::vector<Eigen::VectorXd> weights;    // per variable
    std::vector<Eigen::MatrixXd> functions;  // per variable, grid x M
};

MultivariateEigenfunctions multivariate_eigenfunctions(std::span<const Eigenbasis> univariate,
                                                       const MultivariateEigen& eigen,
                                                       const std::vector<int>& block_offsets);

struct MfpcaConfig {
    UfpcaConfig univariate;
    ComponentRule multivariate{std::nullopt, 0.99, 1 << 20};
    bool center_scores = false;
};

class MultivariateVdFit {
public:
    const std::vector<UnivariateVdFpcaFit>& univariate() const { return univariate_; }
    const StackedScores& stacked() const { return stacked_; }
    const ScoreCovarianceModel& score_covariance() const { return model_; }
    int num_components() const { return num_components_; }
    /// N x M
    const Eigen::MatrixXd& scores() const { return rho_; }
    const std::map<double, MultivariateEigen>& eigen() const { return eigen_; }

    std::size_t subject_index(const std::string& subject_id) const;
    MultivariateEigen eigen_at(double domain_length) const;
    MultivariateEigenfunctions eigenfunctions_at(double domain_length) const;

    friend MultivariateVdFit fit_vd_mfpca(const FunctionalDataset&, const MfpcaConfig&);

private:
    std::vector<UnivariateVdFpcaFit> univariate_;
    StackedScores stacked_;
    ScoreCovarianceModel model_;
    int num_components_ = 0;
    std::map<double, MultivariateEigen> eigen_;
    Eigen::MatrixXd rho_;
    std::map<std::string, std::size_t> index_;
};

MultivariateVdFit fit_vd_mfpca(const FunctionalDataset& data, const MfpcaConfig& config);

/// Per-variable reconstruction at the subject's own observation times using
/// the first `m` multivariate components.
std::vector<Series> reconstruct(const MultivariateVdFit& fit, const FunctionalDataset& data,
                                const std::string& subject_id, int m);

struct VarianceShare {
    double domain_length;
    int component;  // 1-based
    double eigenvalue;
    double share;
};

/// nu_m(T) / sum nu(T) for m <= M at each T of the grid.
std::vector<VarianceShare> variance_explained_curve(const ScoreCovarianceModel& model,
                                                    std::span<const double> t_grid, int m);

/// Eigenpairs along a T-grid with c_m(T_{g+1}) sign-aligned to c_m(T_g).
std::vector<MultivariateEigen> eigen_path(const ScoreCovarianceModel& model, std::span<const double> t_grid,
                                          int m);

struct Association {
    double rho;
    double p_value;
};

/// Spearman correlation between each score column and the domain lengths.
std::vector<Association> score_domain_association(const Eigen::MatrixXd& scores,
                                                  std::span<const double> domain_lengths);

}  // namespace vdmfpca
