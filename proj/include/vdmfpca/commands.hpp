#pragma once

#include <cstdint>
#include <exception>
#include <string>
#include <vector>

#include <json.hpp>

#include "vdmfpca/benchmark.hpp"
#include "vdmfpca/simgen.hpp"
#include "vdmfpca/vd_mfpca.hpp"

namespace vdmfpca {

inline constexpr const char* kVersion = "1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitBenchmark = 4;

struct FitSettings {
    MfpcaConfig mfpca;
    int min_obs = 0;
};

/// Flat object with keys degree, mean_basis_t, mean_basis_T, cov_basis_t,
/// cov_basis_T, score_basis_T, penalty_order, lambda_grid, include_diagonal,
/// pve_univariate, k_max, k_fixed, pve_multivariate, m_fixed, grid_step,
/// min_obs, center_scores. Missing keys keep their defaults; unknown keys
/// raise ConfigError. A fit manifest is accepted too (its "config" member is used).
FitSettings fit_settings_from_json(const nlohmann::json& j);
nlohmann::json fit_settings_to_json(const FitSettings& settings);

struct SimulateOptions {
    SimConfig sim;
    std::string out_dir;
};

/// Writes data.csv and truth.json into out_dir.
void cmd_simulate(const SimulateOptions& options);

struct FitOptions {
    std::string data_csv;
    std::string config_json;  // empty: defaults
    std::string out_dir;
};

struct FitReport {
    int n_subjects = 0;
    int excluded_subjects = 0;
    std::vector<int> univariate_components;
    int multivariate_components = 0;
};

/// Writes eigenfunctions.csv, scores.csv, variance.csv, spearman.csv and manifest.json.
FitReport cmd_fit(const FitOptions& options);

struct BenchmarkOptions {
    std::string scenarios_json;
    int replicates = 1;
    int jobs = 1;
    std::uint64_t seed = 1;
    std::string out_csv;
};

struct BenchmarkSpec {
    std::vector<Scenario> scenarios;
    EvaluationConfig evaluation;
};

/// Either an array of scenarios or {"scenarios": [...], "config": {...}}.
/// A scenario is {"n": 100, "dist": "uniform", "sigma": 0.1, "bins": [5, 10]}.
BenchmarkSpec parse_benchmark_spec(const nlohmann::json& j);

/// Writes the results CSV plus <stem>_summary.csv and <stem>_summary.md.
BenchmarkResult cmd_benchmark(const BenchmarkOptions& options);

/// 2 for configuration errors, 3 for data errors, 1 otherwise.
int exit_code_for(const std::exception& e);

}  // namespace vdmfpca
