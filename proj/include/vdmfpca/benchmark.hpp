#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vdmfpca/baseline.hpp"
#include "vdmfpca/simgen.hpp"
#include "vdmfpca/vd_mfpca.hpp"

namespace vdmfpca {

struct Scenario {
    int n_subjects = 100;
    DomainDistribution distribution = DomainDistribution::Uniform;
    double sigma = 0.1;
    std::vector<int> bins{5, 10};

    /// Stable text key, e.g. "N=100|uniform|sigma=0.1"; feeds the seed path.
    std::string label() const;
};

/// One long-format results row. `n_bins` is 0 for VD-MFPCA rows and
/// `component` is 0 for ARMSE_X and ERROR rows.
struct ResultRow {
    int n_subjects = 0;
    std::string domain_dist;
    double sigma = 0.0;
    int n_bins = 0;
    int replicate = 0;
    std::string method;
    std::string metric;
    std::string variable;
    int component = 0;
    double value = 0.0;
    std::string message;  // ERROR rows only
};

inline constexpr const char* kMethodVd = "VD-MFPCA";
inline constexpr const char* kMethodBin = "BIN";

struct EvaluationConfig {
    MfpcaConfig vd;
    BinnedConfig bin;
    int pc_components = 2;
};

/// Seed of replicate `r` of a scenario.
std::uint64_t replicate_seed(std::uint64_t base_seed, const Scenario& scenario, int replicate);

/// Generates one replicate, fits VD-MFPCA and every requested binned
/// baseline, and returns the metric rows. Method failures become ERROR rows.
std::vector<ResultRow> evaluate_replicate(const Scenario& scenario, int replicate, std::uint64_t base_seed,
                                          const EvaluationConfig& config);

/// Metric rows for an already fitted VD model against simulation truth.
std::vector<ResultRow> vd_metric_rows(const MultivariateVdFit& fit, const FunctionalDataset& data,
                                      const SimTruth& truth, int pc_components);

/// Metric rows for a binned fit against simulation truth.
std::vector<ResultRow> bin_metric_rows(const BinnedMfpcaFit& fit, const SimTruth& truth, int pc_components);

struct BenchmarkConfig {
    std::vector<Scenario> scenarios;
    int replicates = 1;
    int jobs = 1;
    std::uint64_t seed = 1;
    EvaluationConfig evaluation;
};

struct BenchmarkResult {
    std::vector<ResultRow> rows;  // sorted
    int total_replicates = 0;
    int failed_replicates = 0;  // replicates with at least one ERROR row

    bool exceeds_failure_threshold(double fraction = 0.05) const;
};

BenchmarkResult run_benchmark(const BenchmarkConfig& config);

/// Orders rows by (scenario, replicate, method, n_bins, metric, variable, component).
void sort_rows(std::vector<ResultRow>& rows);

struct SummaryRow {
    int n_subjects = 0;
    std::string domain_dist;
    double sigma = 0.0;
    int n_bins = 0;
    std::string method;
    std::string metric;
    std::string variable;
    int component = 0;
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};

/// Mean and SD per cell over replicates; ERROR rows are skipped.
std::vector<SummaryRow> summarize_rows(const std::vector<ResultRow>& rows);

std::string format_number(double value);

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
/// One table per (metric, variable, component): rows are scenarios, columns
/// are methods, cells "mean (sd)".
void write_summary_markdown(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace vdmfpca
