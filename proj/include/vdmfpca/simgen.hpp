#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vdmfpca/dataset.hpp"

namespace vdmfpca {

/// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based seed derivation: folds each path element into `base`.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

/// FNV-1a, used to turn scenario labels into seed path elements.
std::uint64_t hash_label(const std::string& label);

enum class DomainDistribution {
    Uniform,          // integer uniform on {10, ..., 100}
    BoundedGeometric  // 10 + min(G, 90), G failures before first success, p = 0.06
};

std::string to_string(DomainDistribution dist);
/// Accepts "uniform"/"D1" and "nbinom"/"geometric"/"D2".
DomainDistribution parse_distribution(const std::string& name);

struct SimConfig {
    int n_subjects = 100;
    DomainDistribution distribution = DomainDistribution::Uniform;
    double sigma = 0.1;
    int n_components = 10;
    std::uint64_t seed = 1;
    /// When set, every subject gets this domain length instead of a draw.
    std::optional<int> fixed_domain;

    void validate() const;
};

inline constexpr int kMinDomain = 10;
inline constexpr int kMaxDomain = 100;
inline constexpr double kGeometricP = 0.06;

std::vector<int> sample_domains(DomainDistribution dist, int n, std::mt19937_64& rng);

/// Exact mean of 10 + min(G, 90) by summing the truncated pmf.
double bounded_geometric_mean(double p = kGeometricP);

double sim_mean1(double t);
double sim_mean2(double t);

/// Normal CDF.
double normal_cdf(double x, double mu = 0.0, double sd = 1.0);

/// W(T) = Phi(T; 30, 10).
double type2_weight(double domain_length);

/// Sine/cosine eigenfunctions on `times` for domain length T (times x n).
Eigen::MatrixXd eigenfunctions_type1(double domain_length, const Eigen::VectorXd& times, int n = 10);
Eigen::MatrixXd eigenfunctions_type2(double domain_length, const Eigen::VectorXd& times, int n = 10);

/// Integer grid {1, ..., T}.
Eigen::VectorXd observation_grid(int domain_length);

struct SubjectTruth {
    std::string subject_id;
    int domain_length = 0;
    Eigen::VectorXd grid;
    std::array<Eigen::VectorXd, 2> scores;
    std::array<Eigen::MatrixXd, 2> eigenfunctions;  // grid x n_components
    std::array<Eigen::VectorXd, 2> mean;
    std::array<Eigen::VectorXd, 2> noiseless;
    std::array<Eigen::VectorXd, 2> noisy;
};

struct SimTruth {
    Eigen::VectorXd eigenvalues;
    std::vector<SubjectTruth> subjects;
};

std::pair<FunctionalDataset, SimTruth> generate(const SimConfig& config);

}  // namespace vdmfpca
