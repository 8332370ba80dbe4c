#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vdmfpca/dataset.hpp"
#include "vdmfpca/vd_ufpca.hpp"

namespace vdmfpca {

/// Equal-width bins over [min T, max T]: left-closed, right-open, the last
/// bin right-closed. Bins with fewer than 2 members are merged into their
/// left neighbour (the first bin merges right).
struct BinAssignment {
    int n_bins_requested = 0;
    std::vector<double> edges;               // final bins, size n_bins() + 1
    std::vector<int> subject_bin;            // per subject, index into final bins
    std::vector<double> truncation;          // per final bin: min member T
    std::vector<std::vector<int>> members;   // per final bin, subject indices
    std::vector<std::string> notes;          // warnings and merges

    int n_bins() const { return static_cast<int>(truncation.size()); }
};

BinAssignment assign_bins(std::span<const double> domain_lengths, int n_bins);

/// One bin's data on the common grid {0, step, ..., L}.
struct BinDataset {
    int bin = 0;
    double truncation = 0.0;
    Eigen::VectorXd grid;
    std::vector<int> subjects;               // dataset indices of retained subjects
    std::vector<Eigen::MatrixXd> values;     // per variable: retained subjects x grid
    std::vector<std::vector<int>> kept_counts;  // per retained subject, per variable: observations with time <= L
    std::vector<int> excluded;               // dataset indices with < 2 retained points
};

std::vector<BinDataset> truncate(const FunctionalDataset& data, const BinAssignment& assignment, double grid_step);

/// Fixed-domain MFPCA of one bin.
struct BinFit {
    int bin = 0;
    double truncation = 0.0;
    Eigen::VectorXd grid;
    Eigen::VectorXd weights;
    std::vector<int> subjects;
    std::vector<Eigen::VectorXd> mean;             // per variable
    std::vector<Eigen::VectorXd> eigenvalues;      // per variable, K_j retained
    std::vector<Eigen::MatrixXd> eigenfunctions;   // per variable, grid x max(K_j, min(cap, grid))
    std::vector<int> block_offsets;
    Eigen::MatrixXd stacked;                       // n x K+
    Eigen::MatrixXd score_covariance;              // K+ x K+
    Eigen::VectorXd mv_eigenvalues;                // M
    Eigen::MatrixXd mv_eigenvectors;               // K+ x M
    Eigen::MatrixXd mv_scores;                     // n x M
    std::vector<Eigen::MatrixXd> mv_eigenfunctions;  // per variable, grid x M
    std::vector<Eigen::MatrixXd> reconstruction;     // per variable, n x grid
};

struct BinnedConfig {
    double grid_step = 1.0;
    ComponentRule univariate{std::nullopt, 0.95, 8};
    ComponentRule multivariate{std::nullopt, 0.99, 1 << 20};
};

BinFit standard_mfpca(const BinDataset& bin, const BinnedConfig& config);

struct BinnedMfpcaFit {
    BinAssignment assignment;
    std::vector<BinFit> bins;  // bins with >= 2 usable subjects
    std::vector<int> subject_fit;  // per subject: index into `bins`, or -1
    std::vector<int> subject_row;  // per subject: row inside that bin fit
};

BinnedMfpcaFit fit_binned(const FunctionalDataset& data, int n_bins, const BinnedConfig& config);

/// Evaluation interval [0, L_bin] for a subject.
double binned_metrics_domain(const BinAssignment& assignment, int subject);

}  // namespace vdmfpca
