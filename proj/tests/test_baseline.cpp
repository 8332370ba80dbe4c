#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vdmfpca/baseline.hpp"
#include "vdmfpca/errors.hpp"
#include "vdmfpca/linalg.hpp"
#include "vdmfpca/simgen.hpp"

using namespace vdmfpca;

namespace {

std::vector<double> range_lengths(int lo, int hi) {
    std::vector<double> t;
    for (int v = lo; v <= hi; ++v) {
        t.push_back(v);
    }
    return t;
}

FunctionalDataset toy(const std::vector<int>& lengths) {
    FunctionalDataset d;
    d.variables = {"X1", "X2"};
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        SubjectRecord s;
        s.subject_id = "S" + std::to_string(i);
        s.domain_length = lengths[i];
        for (int j = 0; j < 2; ++j) {
            Series ser;
            for (int t = 1; t <= lengths[i]; ++t) {
                ser.time.push_back(t);
                ser.value.push_back(std::sin(0.1 * t + j + static_cast<double>(i)));
            }
            s.series.push_back(std::move(ser));
        }
        d.subjects.push_back(std::move(s));
    }
    return d;
}

BinDataset single_bin(const std::vector<Eigen::MatrixXd>& values, double length) {
    BinDataset b;
    b.truncation = length;
    b.grid = domain_grid(length, 1.0);
    b.values = values;
    for (Eigen::Index i = 0; i < values.front().rows(); ++i) {
        b.subjects.push_back(static_cast<int>(i));
    }
    return b;
}

}  // namespace

TEST(AssignBins, EqualWidthEdges) {
    const auto t = range_lengths(10, 100);
    const BinAssignment a = assign_bins(t, 5);
    const std::vector<double> expected{10, 28, 46, 64, 82, 100};
    ASSERT_EQ(a.edges.size(), expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) {
        EXPECT_NEAR(a.edges[k], expected[k], 1e-12);
    }
    EXPECT_EQ(a.subject_bin[46 - 10], 2);
    EXPECT_EQ(a.subject_bin[45 - 10], 1);
    EXPECT_EQ(a.subject_bin[100 - 10], 4);
}

TEST(AssignBins, TruncationMatchesBruteScan) {
    std::mt19937_64 rng(5);
    std::vector<double> t(300);
    for (auto& v : t) {
        v = static_cast<double>(std::uniform_int_distribution<int>(10, 100)(rng));
    }
    for (int nb : {5, 10}) {
        const BinAssignment a = assign_bins(t, nb);
        std::size_t total = 0;
        for (int b = 0; b < a.n_bins(); ++b) {
            double lo = INFINITY;
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (a.subject_bin[i] == b) {
                    lo = std::min(lo, t[i]);
                    EXPECT_LE(a.truncation[static_cast<std::size_t>(b)], t[i]);
                }
            }
            EXPECT_EQ(a.truncation[static_cast<std::size_t>(b)], lo);
            total += a.members[static_cast<std::size_t>(b)].size();
        }
        EXPECT_EQ(total, t.size());
        EXPECT_EQ(a.edges.front(), 10.0);
        EXPECT_EQ(a.edges.back(), 100.0);
    }
}

TEST(AssignBins, SparseBinsMergeAndWarn) {
    // Second bin [28, 46) holds one subject; it joins the first bin.
    const std::vector<double> t{10, 11, 12, 30, 50, 51, 70, 71, 90, 100};
    const BinAssignment a = assign_bins(t, 5);
    EXPECT_EQ(a.n_bins(), 4);
    EXPECT_EQ(a.subject_bin[3], 0);
    EXPECT_EQ(a.truncation[0], 10.0);
    EXPECT_FALSE(a.notes.empty());

    // A lone subject in the first bin is carried into the next one.
    const std::vector<double> u{10, 30, 31, 50, 51, 70, 71, 90, 95, 100};
    const BinAssignment b = assign_bins(u, 5);
    EXPECT_EQ(b.subject_bin[0], b.subject_bin[1]);
    EXPECT_EQ(b.truncation[0], 10.0);
}

TEST(AssignBins, Errors) {
    const std::vector<double> t{10, 20, 30};
    EXPECT_THROW(assign_bins(t, 1), ConfigError);
    EXPECT_THROW(assign_bins(t, 5), ConfigError);
}

TEST(Truncate, ManualCountsOnFiveSubjects) {
    const FunctionalDataset d = toy({12, 15, 20, 35, 40});
    BinAssignment a;
    a.subject_bin = {0, 0, 0, 1, 1};
    a.members = {{0, 1, 2}, {3, 4}};
    a.truncation = {12, 35};
    a.edges = {12, 30, 40};
    const auto bins = truncate(d, a, 1.0);
    ASSERT_EQ(bins.size(), 2U);
    const std::vector<std::vector<int>> expected{{12, 12}, {12, 12}, {12, 12}};
    EXPECT_EQ(bins[0].kept_counts, expected);
    EXPECT_EQ(bins[1].kept_counts, (std::vector<std::vector<int>>{{35, 35}, {35, 35}}));
    EXPECT_EQ(bins[0].grid.size(), 13);
    EXPECT_EQ(bins[0].grid(12), 12.0);
    // Subject 0 has T equal to the bin minimum, so its observed values survive unchanged.
    for (int t = 1; t <= 12; ++t) {
        EXPECT_NEAR(bins[0].values[0](0, t), d.subjects[0].series[0].value[static_cast<std::size_t>(t - 1)], 1e-14);
    }
    for (const auto& b : bins) {
        EXPECT_LE(b.grid.maxCoeff(), b.truncation);
    }
}

TEST(Truncate, ExcludesSubjectsWithTooFewPoints) {
    FunctionalDataset d = toy({12, 15, 20});
    d.subjects[2].series[1].time = {1, 14, 20};
    d.subjects[2].series[1].value = {0.0, 1.0, 2.0};
    BinAssignment a;
    a.subject_bin = {0, 0, 0};
    a.members = {{0, 1, 2}};
    a.truncation = {12};
    a.edges = {12, 20};
    const auto bins = truncate(d, a, 1.0);
    EXPECT_EQ(bins[0].excluded, (std::vector<int>{2}));
    EXPECT_EQ(bins[0].subjects, (std::vector<int>{0, 1}));
}

TEST(StandardMfpca, IdenticalSubjects) {
    const double L = 30.0;
    const Eigen::VectorXd grid = domain_grid(L, 1.0);
    const Eigen::VectorXd curve = grid.unaryExpr([](double t) { return std::cos(0.2 * t); });
    Eigen::MatrixXd x = curve.transpose().replicate(8, 1);
    const BinFit fit = standard_mfpca(single_bin({x, 2.0 * x}, L), BinnedConfig{});
    for (const auto& ev : fit.eigenvalues) {
        EXPECT_LE(ev.cwiseAbs().maxCoeff(), 1e-10);
    }
    for (Eigen::Index i = 0; i < 8; ++i) {
        EXPECT_LE((fit.reconstruction[0].row(i).transpose() - curve).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LE((fit.reconstruction[1].row(i).transpose() - 2.0 * curve).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(StandardMfpca, RecoversRankTwoTruth) {
    const double L = 50.0;
    const Eigen::VectorXd grid = domain_grid(L, 1.0);
    const Eigen::MatrixXd phi = eigenfunctions_type1(L, grid, 2);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<Eigen::MatrixXd> values(2, Eigen::MatrixXd(200, grid.size()));
    for (Eigen::Index i = 0; i < 200; ++i) {
        for (auto& v : values) {
            v.row(i) = (phi.col(0) * z(rng) + phi.col(1) * std::sqrt(0.5) * z(rng)).transpose();
        }
    }
    const BinFit fit = standard_mfpca(single_bin(values, L), BinnedConfig{});
    for (std::size_t j = 0; j < 2; ++j) {
        ASSERT_EQ(fit.eigenvalues[j].size(), 2);
        for (int k = 0; k < 2; ++k) {
            const Eigen::VectorXd est = fit.eigenfunctions[j].col(k);
            const double sign = est.dot(phi.col(k)) >= 0.0 ? 1.0 : -1.0;
            const double rmse = std::sqrt((sign * est - phi.col(k)).squaredNorm() / static_cast<double>(grid.size()));
            EXPECT_LE(rmse, 0.1) << "variable " << j << " component " << k;
        }
    }
    const Eigen::MatrixXd gram =
        fit.mv_eigenvectors.transpose() * fit.mv_eigenvectors - Eigen::MatrixXd::Identity(fit.mv_eigenvectors.cols(), fit.mv_eigenvectors.cols());
    EXPECT_LE(gram.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(StandardMfpca, ParsevalWithFullM) {
    const FunctionalDataset data = generate(SimConfig{60, DomainDistribution::Uniform, 0.1, 10, 4, std::nullopt}).first;
    BinnedConfig cfg;
    cfg.multivariate = ComponentRule{1 << 20};
    const BinnedMfpcaFit fit = fit_binned(data, 2, cfg);
    for (const auto& b : fit.bins) {
        ASSERT_EQ(b.mv_scores.cols(), b.stacked.cols());
        for (Eigen::Index i = 0; i < b.stacked.rows(); ++i) {
            EXPECT_NEAR(b.mv_scores.row(i).squaredNorm(), b.stacked.row(i).squaredNorm(), 1e-10);
        }
        for (std::size_t j = 0; j < b.eigenvalues.size(); ++j) {
            for (Eigen::Index k = 1; k < b.eigenvalues[j].size(); ++k) {
                EXPECT_LE(b.eigenvalues[j](k), b.eigenvalues[j](k - 1));
            }
        }
    }
}

TEST(BinnedMetricsDomain, RestrictsToBinTruncation) {
    const FunctionalDataset data = generate(SimConfig{80, DomainDistribution::Uniform, 0.1, 10, 6, std::nullopt}).first;
    const BinnedMfpcaFit fit = fit_binned(data, 5, BinnedConfig{});
    const auto& a = fit.assignment;
    std::size_t evaluated = 0;
    std::size_t brute = 0;
    for (std::size_t i = 0; i < data.subjects.size(); ++i) {
        const double L = binned_metrics_domain(a, static_cast<int>(i));
        EXPECT_EQ(L, a.truncation[static_cast<std::size_t>(a.subject_bin[i])]);
        const auto& b = fit.bins[static_cast<std::size_t>(fit.subject_fit[i])];
        for (Eigen::Index g = 0; g < b.grid.size(); ++g) {
            evaluated += (b.grid(g) >= 1.0) ? 1 : 0;
        }
        for (double t : data.subjects[i].series[0].time) {
            brute += t <= L ? 1 : 0;
        }
    }
    EXPECT_EQ(evaluated, brute);
    const auto shortest = std::min_element(a.truncation.begin(), a.truncation.end());
    const auto lengths = data.domain_lengths();
    EXPECT_EQ(*shortest, *std::min_element(lengths.begin(), lengths.end()));
    EXPECT_THROW(binned_metrics_domain(a, -1), LookupError);
    EXPECT_THROW(binned_metrics_domain(a, 80), LookupError);
}
