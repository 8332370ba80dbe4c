// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vdmfpca/benchmark.hpp"
#include "vdmfpca/linalg.hpp"
#include "vdmfpca/metrics.hpp"
#include "vdmfpca/pspline.hpp"
#include "vdmfpca/simgen.hpp"
#include "vdmfpca/vd_mfpca.hpp"

using namespace vdmfpca;

namespace {

constexpr std::uint64_t kBaseSeed = 20240101;

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

int jobs() { return static_cast<int>(std::max(1U, std::thread::hardware_concurrency())); }

struct Checks {
    bool all = true;
    std::string failed;
    void add(const std::string& name, bool ok, const std::string& value) {
        if (!ok) {
            all = false;
            failed += (failed.empty() ? "" : "; ") + name + " " + value;
        }
    }
};

// Replicate values for (method, n_bins, metric, variable, component).
std::map<int, double> cell(const std::vector<ResultRow>& rows, const std::string& method, int n_bins,
                           const std::string& metric, const std::string& variable, int component) {
    std::map<int, double> out;
    for (const auto& r : rows) {
        if (r.method == method && r.n_bins == n_bins && r.metric == metric && r.variable == variable &&
            r.component == component) {
            out[r.replicate] = r.value;
        }
    }
    return out;
}

double mean_of(const std::map<int, double>& values) {
    if (values.empty()) {
        return std::nan("");
    }
    double s = 0.0;
    for (const auto& [r, v] : values) {
        s += v;
    }
    return s / static_cast<double>(values.size());
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

int error_rows(const std::vector<ResultRow>& rows) {
    return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const ResultRow& r) { return r.metric == "ERROR"; }));
}

BenchmarkResult run_scenario(DomainDistribution dist, double sigma, int replicates, int n_jobs) {
    BenchmarkConfig cfg;
    cfg.scenarios = {Scenario{100, dist, sigma, {5, 10}}};
    cfg.replicates = replicates;
    cfg.jobs = n_jobs;
    cfg.seed = kBaseSeed;
    return run_benchmark(cfg);
}

void reconstruction_and_ordering() {
    const auto start = std::chrono::steady_clock::now();
    const BenchmarkResult res = run_scenario(DomainDistribution::Uniform, 0.1, 20, jobs());
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const double vd = mean_of(cell(res.rows, kMethodVd, 0, "ARMSE_X", "X1", 0));
    const double b5 = mean_of(cell(res.rows, kMethodBin, 5, "ARMSE_X", "X1", 0));
    report("Reconstruction benchmark (N=100, D1, sigma=0.1, R=20)",
           within(vd, 0.20, 0.50) && within(b5, 1.05, 1.80) && seconds <= 1800.0,
           "VD ARMSE_X(X1) mean " + fmt(vd) + " in [0.20, 0.50]; BIN5 mean " + fmt(b5) + " in [1.05, 1.80]; runtime " +
               fmt(seconds, 1) + " s <= 1800 s; error rows " + std::to_string(error_rows(res.rows)));

    int violations = 0;
    int compared = 0;
    for (const char* var : {"X1", "X2"}) {
        const auto v = cell(res.rows, kMethodVd, 0, "ARMSE_X", var, 0);
        const auto c5 = cell(res.rows, kMethodBin, 5, "ARMSE_X", var, 0);
        const auto c10 = cell(res.rows, kMethodBin, 10, "ARMSE_X", var, 0);
        for (int r = 1; r <= 20; ++r) {
            const bool present = v.count(r) && c5.count(r) && c10.count(r);
            compared += present ? 1 : 0;
            if (!present || !(v.at(r) < c5.at(r) && v.at(r) < c10.at(r))) {
                ++violations;
            }
        }
    }
    report("Ordering claims (VD < BIN5 and VD < BIN10 in every replicate, both variables)", violations == 0,
           std::to_string(violations) + " of 40 replicate-variable pairs violate; " + std::to_string(compared) +
               " complete pairs; means X2: VD " + fmt(mean_of(cell(res.rows, kMethodVd, 0, "ARMSE_X", "X2", 0))) +
               ", BIN5 " + fmt(mean_of(cell(res.rows, kMethodBin, 5, "ARMSE_X", "X2", 0))) + ", BIN10 " +
               fmt(mean_of(cell(res.rows, kMethodBin, 10, "ARMSE_X", "X2", 0))) + "; X1 BIN10 " +
               fmt(mean_of(cell(res.rows, kMethodBin, 10, "ARMSE_X", "X1", 0))));
}

void eigenfunction_accuracy() {
    const BenchmarkResult res = run_scenario(DomainDistribution::Uniform, 0.01, 10, jobs());
    const double vd = mean_of(cell(res.rows, kMethodVd, 0, "ARMSE_PC", "X1", 1));
    const double b5 = mean_of(cell(res.rows, kMethodBin, 5, "ARMSE_PC", "X1", 1));
    const double b10 = mean_of(cell(res.rows, kMethodBin, 10, "ARMSE_PC", "X1", 1));
    report("Eigenfunction accuracy (N=100, D1, sigma=0.01, R=10, PC1 of X1)",
           within(vd, 0.15, 0.35) && within(b5, 0.6, 1.5) && within(b10, 1.2, 2.4) && b10 > b5,
           "VD " + fmt(vd) + " in [0.15, 0.35]; BIN5 " + fmt(b5) + " in [0.6, 1.5]; BIN10 " + fmt(b10) +
               " in [1.2, 2.4]; BIN10 > BIN5 " + (b10 > b5 ? "yes" : "no"));
}

void skewed_domains() {
    const BenchmarkResult res = run_scenario(DomainDistribution::BoundedGeometric, 0.1, 10, jobs());
    const double vd = mean_of(cell(res.rows, kMethodVd, 0, "ARMSE_PC", "X1", 1));
    const double b5 = mean_of(cell(res.rows, kMethodBin, 5, "ARMSE_PC", "X1", 1));
    report("D2 skew behaviour (N=100, D2, sigma=0.1, R=10, PC1 of X1)", vd <= 0.45 && b5 >= 0.9,
           "VD " + fmt(vd) + " <= 0.45; BIN5 " + fmt(b5) + " >= 0.9");
}

std::string rows_text(std::vector<ResultRow> rows) {
    sort_rows(rows);
    std::ostringstream os;
    write_results_csv(os, rows);
    return os.str();
}

void property_suite() {
    Checks c;

    SimConfig sc;
    sc.seed = derive_seed(kBaseSeed, {1});
    const auto [data, truth] = generate(sc);
    MfpcaConfig full_cfg;
    full_cfg.multivariate = ComponentRule{1 << 20};
    const MultivariateVdFit fit = fit_vd_mfpca(data, full_cfg);

    double uni = 0.0;
    for (const auto& u : fit.univariate()) {
        for (const auto& [T, b] : u.eigenbases()) {
            const Eigen::MatrixXd g = b.functions.transpose() * b.weights.asDiagonal() * b.functions;
            for (Eigen::Index k = 0; k < g.rows(); ++k) {
                if (b.eigenvalues(k) <= 0.0) {
                    continue;
                }
                for (Eigen::Index l = 0; l < g.cols(); ++l) {
                    if (b.eigenvalues(l) > 0.0) {
                        uni = std::max(uni, std::abs(g(k, l) - (k == l ? 1.0 : 0.0)));
                    }
                }
            }
        }
    }
    c.add("univariate orthonormality", uni <= 1e-6, fmt(uni, 12));

    double mv = 0.0;
    double min_eig = 0.0;
    for (const auto& [T, e] : fit.eigen()) {
        const Eigen::Index m = e.vectors.cols();
        mv = std::max(mv, (e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff());
        const Eigen::MatrixXd cov = eval_score_covariance(fit.score_covariance(), T);
        min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov).eigenvalues().minCoeff());
    }
    c.add("multivariate orthonormality", mv <= 1e-10, fmt(mv, 14));

    double parseval = 0.0;
    for (Eigen::Index i = 0; i < fit.scores().rows(); ++i) {
        parseval = std::max(parseval,
                            std::abs(fit.scores().row(i).squaredNorm() - fit.stacked().scores.row(i).squaredNorm()));
    }
    c.add("Parseval", parseval <= 1e-10, fmt(parseval, 14));

    std::mt19937_64 rng(7);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd a(6, 6);
    for (auto& v : a.reshaped()) {
        v = z(rng);
    }
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(psd_repair(a + a.transpose())).eigenvalues().minCoeff());
    c.add("PSD repair", min_eig >= -1e-10, fmt(min_eig, 14));

    SimConfig r3;
    r3.sigma = 0.0;
    r3.n_components = 3;
    r3.seed = derive_seed(kBaseSeed, {3});
    const auto [d3, t3] = generate(r3);
    MfpcaConfig c3;
    c3.univariate.components = ComponentRule{3};
    c3.multivariate = ComponentRule{6};
    const auto rows3 = vd_metric_rows(fit_vd_mfpca(d3, c3), d3, t3, 0);
    for (const auto& r : rows3) {
        if (r.metric == "ARMSE_X") {
            c.add("rank-3 noiseless ARMSE_X(" + r.variable + ")", r.value <= 0.05, fmt(r.value));
        }
    }

    const BasisSpec spec{3, 12, 0.0, 10.0};
    const Eigen::MatrixXd pen = difference_penalty(12, 2);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(12);
    const Eigen::VectorXd lin = Eigen::VectorXd::LinSpaced(12, 0.0, 11.0);
    const double null_space = std::max((pen * ones).cwiseAbs().maxCoeff(), (pen * lin).cwiseAbs().maxCoeff());
    c.add("penalty null space", null_space <= 1e-12, fmt(null_space, 14));
    std::vector<double> xs;
    for (int i = 0; i <= 1000; ++i) {
        xs.push_back(10.0 * i / 1000.0);
    }
    const double pou = (bspline_design(spec, xs).rowwise().sum().array() - 1.0).abs().maxCoeff();
    c.add("partition of unity", pou <= 1e-12, fmt(pou, 14));

    std::normal_distribution<double> noise(0.0, 0.3);
    const int n = 120;
    std::vector<double> x(n);
    std::vector<double> y(n);
    Eigen::MatrixXd pts(n, 1);
    for (int i = 0; i < n; ++i) {
        x[static_cast<std::size_t>(i)] = 10.0 * i / (n - 1);
        pts(i, 0) = x[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(i)] = std::cos(0.7 * x[static_cast<std::size_t>(i)]) + noise(rng);
    }
    SmoothingPath path;
    const PenaltySpec penalty{};
    fit_surface(pts, y, {}, {spec}, penalty, &path);
    const Eigen::MatrixXd b = bspline_design(spec, x);
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    std::size_t best = 0;
    double best_gcv = INFINITY;
    for (std::size_t g = 0; g < penalty.lambda_grid.size(); ++g) {
        const Eigen::MatrixXd hat = b * (b.transpose() * b + penalty.lambda_grid[g] * pen).ldlt().solve(b.transpose());
        const double edf = hat.trace();
        const double gcv = n * (yv - hat * yv).squaredNorm() / ((n - edf) * (n - edf));
        if (gcv < best_gcv) {
            best_gcv = gcv;
            best = g;
        }
    }
    c.add("GCV argmin", best == path.selected, std::to_string(path.selected) + " vs " + std::to_string(best));

    const MultivariateVdFit again = fit_vd_mfpca(data, full_cfg);
    c.add("fit determinism", again.scores() == fit.scores(), "scores differ");

    BenchmarkConfig bc;
    bc.scenarios = {Scenario{40, DomainDistribution::Uniform, 0.1, {5, 10}}};
    bc.replicates = 4;
    bc.seed = kBaseSeed;
    bc.jobs = 1;
    const std::string serial = rows_text(run_benchmark(bc).rows);
    bc.jobs = 8;
    const std::string parallel = rows_text(run_benchmark(bc).rows);
    c.add("J=1 vs J=8", serial == parallel, "row text differs");

    report("Property suite", c.all, c.all ? "all property checks within tolerance" : c.failed);
}

double cox_de_boor(const std::vector<double>& knots, int i, int degree, double x) {
    if (degree == 0) {
        return (knots[static_cast<std::size_t>(i)] <= x && x < knots[static_cast<std::size_t>(i) + 1]) ? 1.0 : 0.0;
    }
    const auto k = [&](int j) { return knots[static_cast<std::size_t>(j)]; };
    double left = 0.0;
    double right = 0.0;
    if (k(i + degree) > k(i)) {
        left = (x - k(i)) / (k(i + degree) - k(i)) * cox_de_boor(knots, i, degree - 1, x);
    }
    if (k(i + degree + 1) > k(i + 1)) {
        right = (k(i + degree + 1) - x) / (k(i + degree + 1) - k(i + 1)) * cox_de_boor(knots, i + 1, degree - 1, x);
    }
    return left + right;
}

void oracle_equivalence() {
    Checks c;

    Eigen::Matrix2d m;
    m << 2, 1, 1, 2;
    const MultivariateEigen e =
        multivariate_eigen_at(ScoreCovarianceModel::constant(m, 30.0), 30.0, ComponentRule{2});
    const double eig_err = std::max({std::abs(e.values(0) - 3.0), std::abs(e.values(1) - 1.0),
                                     std::abs(std::abs(e.vectors(0, 0)) - 1.0 / std::numbers::sqrt2),
                                     std::abs(std::abs(e.vectors(1, 0)) - 1.0 / std::numbers::sqrt2)});
    c.add("2x2 eigenproblem", eig_err <= 1e-12, fmt(eig_err, 14));

    const std::vector<double> sx{1, 2, 3, 4, 5, 6, 7};
    const std::vector<double> sy{2, 1, 4, 3, 7, 5, 6};
    double d2 = 0.0;
    for (std::size_t i = 0; i < sx.size(); ++i) {
        d2 += (sx[i] - sy[i]) * (sx[i] - sy[i]);
    }
    const double rho = 1.0 - 6.0 * d2 / (7.0 * 48.0);
    c.add("Spearman", std::abs(spearman(sx, sy).rho - rho) <= 1e-14, fmt(spearman(sx, sy).rho, 14));

    const std::vector<Eigen::VectorXd> truth{Eigen::Vector3d(1, 2, 3), Eigen::Vector2d(0, 1)};
    const std::vector<Eigen::VectorXd> est{Eigen::Vector3d(1, 1, 3), Eigen::Vector2d(1, 2)};
    const double armse = (std::sqrt(1.0 / 3.0) + 1.0) / 2.0;
    c.add("ARMSE_X", std::abs(armse_x(truth, est) - armse) <= 1e-14, fmt(armse_x(truth, est), 14));

    const std::vector<double> reps{0.2, 0.4, 0.3, 0.5, 0.1};
    const CellSummary s = summarize(reps);
    const double sd = std::sqrt((0.01 + 0.01 + 0.0 + 0.04 + 0.04) / 4.0);
    c.add("summary", std::abs(s.mean - 0.3) <= 1e-14 && std::abs(s.sd - sd) <= 1e-14, fmt(s.mean) + "/" + fmt(s.sd));

    const BasisSpec spec{3, 9, 0.0, 1.0};
    std::vector<double> knots;
    for (int i = 0; i <= spec.num_basis + spec.degree; ++i) {
        knots.push_back(spec.domain_lo + (i - spec.degree) * spec.spacing());
    }
    double cdb = 0.0;
    for (double x : {0.0, 0.13, 0.37, 0.5, 0.81, 0.999}) {
        const std::vector<double> pt{x};
        const Eigen::MatrixXd row = bspline_design(spec, pt);
        for (int i = 0; i < spec.num_basis; ++i) {
            cdb = std::max(cdb, std::abs(row(0, i) - cox_de_boor(knots, i, spec.degree, x)));
        }
    }
    c.add("Cox-de Boor", cdb <= 1e-12, fmt(cdb, 14));

    double pmf_mean = 0.0;
    double tail = 1.0;
    for (int g = 0; g < 90; ++g) {
        const double pg = std::pow(1.0 - kGeometricP, g) * kGeometricP;
        pmf_mean += (10 + g) * pg;
        tail -= pg;
    }
    pmf_mean += 100.0 * tail;
    std::mt19937_64 rng(derive_seed(kBaseSeed, {9}));
    const auto draws = sample_domains(DomainDistribution::BoundedGeometric, 100000, rng);
    double emp = 0.0;
    for (int t : draws) {
        emp += t;
    }
    emp /= static_cast<double>(draws.size());
    c.add("truncated-geometric mean", std::abs(bounded_geometric_mean() - pmf_mean) <= 1e-9 && std::abs(emp - pmf_mean) <= 0.5,
          fmt(emp) + " vs " + fmt(pmf_mean));

    report("Oracle equivalence", c.all, c.all ? "all oracles within tolerance" : c.failed);
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void()>>> criteria{
        {"Reconstruction benchmark / ordering", reconstruction_and_ordering},
        {"Eigenfunction accuracy", eigenfunction_accuracy},
        {"D2 skew behaviour", skewed_domains},
        {"Property suite", property_suite},
        {"Oracle equivalence", oracle_equivalence},
    };
    for (const auto& [name, run] : criteria) {
        try {
            run();
        } catch (const std::exception& e) {
            report(name, false, std::string("exception: ") + e.what());
        }
    }
    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
