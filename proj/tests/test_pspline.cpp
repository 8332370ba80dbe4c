#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vdmfpca/errors.hpp"
#include "vdmfpca/pspline.hpp"

using namespace vdmfpca;

namespace {

// Textbook Cox-de Boor recursion on the extended knot vector.
double cox_de_boor(const std::vector<double>& knots, int i, int degree, double x) {
    if (degree == 0) {
        return (knots[i] <= x && x < knots[i + 1]) ? 1.0 : 0.0;
    }
    double left = 0.0;
    double right = 0.0;
    const double d1 = knots[i + degree] - knots[i];
    const double d2 = knots[i + degree + 1] - knots[i + 1];
    if (d1 > 0.0) {
        left = (x - knots[i]) / d1 * cox_de_boor(knots, i, degree - 1, x);
    }
    if (d2 > 0.0) {
        right = (knots[i + degree + 1] - x) / d2 * cox_de_boor(knots, i + 1, degree - 1, x);
    }
    return left + right;
}

std::vector<double> extended_knots(const BasisSpec& s) {
    const double h = (s.domain_hi - s.domain_lo) / (s.num_basis - s.degree);
    std::vector<double> k;
    for (int i = 0; i <= s.num_basis + s.degree; ++i) {
        k.push_back(s.domain_lo + (i - s.degree) * h);
    }
    return k;
}

Eigen::MatrixXd explicit_difference(int n, int order) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(n, n);
    for (int o = 0; o < order; ++o) {
        Eigen::MatrixXd next(d.rows() - 1, n);
        for (Eigen::Index r = 0; r + 1 < d.rows(); ++r) {
            next.row(r) = d.row(r + 1) - d.row(r);
        }
        d = next;
    }
    return d;
}

}  // namespace

TEST(BsplineDesign, DegreeZeroIsIndicator) {
    const BasisSpec s{0, 4, 0.0, 1.0};
    const std::vector<double> x{0.3};
    const Eigen::MatrixXd b = bspline_design(s, x);
    EXPECT_EQ(b.row(0), Eigen::RowVector4d(0, 1, 0, 0));
}

TEST(BsplineDesign, PartitionOfUnity) {
    const BasisSpec s{3, 9, -2.0, 7.5};
    std::vector<double> x{-2.0, 7.5};
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-2.0, 7.5);
    for (int i = 0; i < 200; ++i) {
        x.push_back(u(rng));
    }
    const Eigen::MatrixXd b = bspline_design(s, x);
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
        EXPECT_NEAR(b.row(r).sum(), 1.0, 1e-12);
    }
}

TEST(BsplineDesign, MatchesCoxDeBoorRecursion) {
    const BasisSpec s{3, 8, 0.0, 1.0};
    const std::vector<double> x{0.37};
    const Eigen::MatrixXd b = bspline_design(s, x);
    const auto knots = extended_knots(s);
    for (int i = 0; i < s.num_basis; ++i) {
        EXPECT_NEAR(b(0, i), cox_de_boor(knots, i, 3, 0.37), 1e-14) << "basis " << i;
    }
}

TEST(BsplineDesign, Errors) {
    const std::vector<double> outside{1.5};
    EXPECT_THROW(bspline_design(BasisSpec{3, 8, 0.0, 1.0}, outside), DomainError);
    const std::vector<double> inside{0.5};
    EXPECT_THROW(bspline_design(BasisSpec{3, 3, 0.0, 1.0}, inside), ConfigError);
}

TEST(DifferencePenalty, FirstOrderLengthThree) {
    Eigen::Matrix3d expected;
    expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    EXPECT_EQ(difference_penalty(3, 1), Eigen::MatrixXd(expected));
}

TEST(DifferencePenalty, MatchesExplicitDifferenceMatrix) {
    const Eigen::MatrixXd d = explicit_difference(6, 2);
    EXPECT_LE((difference_penalty(6, 2) - d.transpose() * d).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DifferencePenalty, PolynomialNullSpace) {
    for (int order = 1; order <= 3; ++order) {
        const Eigen::MatrixXd p = difference_penalty(10, order);
        for (int deg = 0; deg < order; ++deg) {
            Eigen::VectorXd c(10);
            for (int i = 0; i < 10; ++i) {
                c(i) = std::pow(0.3 * i - 1.0, deg);
            }
            EXPECT_LE(std::abs(c.dot(p * c)), 1e-12) << "order " << order << " degree " << deg;
        }
    }
    EXPECT_THROW(difference_penalty(2, 2), ConfigError);
}

TEST(DifferencePenalty, RankIsBasisMinusOrder) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(difference_penalty(9, 2));
    EXPECT_EQ(lu.rank(), 7);
}

TEST(FitSurface, ConstantDataIsReproduced) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    Eigen::MatrixXd pts(150, 2);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        pts(i, 0) = u(rng);
        pts(i, 1) = u(rng);
    }
    const std::vector<double> y(150, 5.0);
    const std::vector<BasisSpec> m{{3, 7, 0.0, 10.0}, {3, 6, 0.0, 10.0}};
    const SmoothSurface s = fit_surface(pts, y, {}, m, PenaltySpec{});
    EXPECT_NEAR(s.evaluate(std::vector<double>{pts(3, 0), pts(3, 1)}), 5.0, 1e-8);
    for (double a : {0.0, 2.5, 10.0}) {
        for (double b : {0.0, 7.1, 10.0}) {
            EXPECT_NEAR(s.evaluate(std::vector<double>{a, b}), 5.0, 1e-8);
        }
    }
}

TEST(FitSurface, LinearDataReproducedForEveryLambda) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd pts(120, 2);
    std::vector<double> y(120);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        pts(i, 0) = u(rng);
        pts(i, 1) = u(rng);
        y[static_cast<std::size_t>(i)] = 1.5 - 2.0 * pts(i, 0) + 0.7 * pts(i, 1);
    }
    const std::vector<BasisSpec> m{{3, 6, 0.0, 1.0}, {3, 6, 0.0, 1.0}};
    for (double lambda : default_lambda_grid()) {
        const SmoothSurface s = fit_surface(pts, y, {}, m, PenaltySpec{2, {lambda}});
        const Eigen::VectorXd f = s.evaluate(pts);
        for (Eigen::Index i = 0; i < pts.rows(); ++i) {
            EXPECT_NEAR(f(i), y[static_cast<std::size_t>(i)], 1e-6) << "lambda " << lambda;
        }
    }
}

TEST(FitSurface, GcvSelectionMatchesBruteForceSweep) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 0.3);
    const int n = 80;
    std::vector<double> x(n), y(n);
    Eigen::MatrixXd pts(n, 1);
    for (int i = 0; i < n; ++i) {
        x[static_cast<std::size_t>(i)] = 10.0 * i / (n - 1);
        pts(i, 0) = x[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(i)] = std::sin(x[static_cast<std::size_t>(i)]) + noise(rng);
    }
    const BasisSpec spec{3, 12, 0.0, 10.0};
    const PenaltySpec penalty{};
    SmoothingPath path;
    const SmoothSurface s = fit_surface(pts, y, {}, {spec}, penalty, &path);

    const Eigen::MatrixXd b = bspline_design(spec, x);
    const Eigen::MatrixXd d = explicit_difference(12, 2);
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    std::size_t best = 0;
    double best_gcv = INFINITY;
    for (std::size_t g = 0; g < penalty.lambda_grid.size(); ++g) {
        const Eigen::MatrixXd a = b.transpose() * b + penalty.lambda_grid[g] * d.transpose() * d;
        const Eigen::MatrixXd hat = b * a.ldlt().solve(b.transpose());
        const double edf = hat.trace();
        const double rss = (yv - hat * yv).squaredNorm();
        const double gcv = n * rss / ((n - edf) * (n - edf));
        EXPECT_NEAR(path.gcv[g], gcv, 1e-8 * gcv);
        if (gcv < best_gcv) {
            best_gcv = gcv;
            best = g;
        }
    }
    EXPECT_EQ(path.selected, best);
    EXPECT_EQ(s.selected_lambda().front(), penalty.lambda_grid[best]);
}

TEST(FitSurface, PenaltyDecreasesAlongLambdaGrid) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.5);
    Eigen::MatrixXd pts(60, 1);
    std::vector<double> y(60);
    for (int i = 0; i < 60; ++i) {
        pts(i, 0) = i / 59.0;
        y[static_cast<std::size_t>(i)] = std::cos(6.0 * pts(i, 0)) + noise(rng);
    }
    const BasisSpec spec{3, 10, 0.0, 1.0};
    const Eigen::MatrixXd p = difference_penalty(10, 2);
    double previous = INFINITY;
    for (double lambda : default_lambda_grid()) {
        const SmoothSurface s = fit_surface(pts, y, {}, {spec}, PenaltySpec{2, {lambda}});
        const double q = s.coefficients().dot(p * s.coefficients());
        EXPECT_LE(q, previous + 1e-10);
        previous = q;
    }
    SmoothingPath path;
    fit_surface(pts, y, {}, {spec}, PenaltySpec{}, &path);
    EXPECT_LE(path.rss.front(), path.rss.back());
}

TEST(FitSurface, EvaluationMatchesNaiveExpansion) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd pts(300, 3);
    std::vector<double> y(300);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        for (int d = 0; d < 3; ++d) {
            pts(i, d) = u(rng) * (d + 1);
        }
        y[static_cast<std::size_t>(i)] = std::sin(3.0 * pts(i, 0)) * pts(i, 1) + pts(i, 2);
    }
    const std::vector<BasisSpec> m{{3, 5, 0.0, 1.0}, {3, 6, 0.0, 2.0}, {3, 4, 0.0, 3.0}};
    const SmoothSurface s = fit_surface(pts, y, {}, m, PenaltySpec{});
    const Eigen::VectorXd& c = s.coefficients();
    for (const std::vector<double> x : {std::vector<double>{0.2, 1.1, 2.9}, std::vector<double>{1.0, 0.0, 0.0}}) {
        const Eigen::MatrixXd b0 = bspline_design(m[0], std::vector<double>{x[0]});
        const Eigen::MatrixXd b1 = bspline_design(m[1], std::vector<double>{x[1]});
        const Eigen::MatrixXd b2 = bspline_design(m[2], std::vector<double>{x[2]});
        double naive = 0.0;
        for (int a = 0; a < 5; ++a) {
            for (int b = 0; b < 6; ++b) {
                for (int d = 0; d < 4; ++d) {
                    naive += c((a * 6 + b) * 4 + d) * b0(0, a) * b1(0, b) * b2(0, d);
                }
            }
        }
        EXPECT_NEAR(s.evaluate(x), naive, 1e-12);
    }
    const double corner = s.evaluate(std::vector<double>{1.0, 2.0, 3.0});
    EXPECT_TRUE(std::isfinite(corner));
    EXPECT_THROW(s.evaluate(std::vector<double>{1.2, 0.0, 0.0}), DomainError);
}

TEST(FitSurface, RejectsEmptyAndNonFiniteInput) {
    const std::vector<BasisSpec> m{{3, 5, 0.0, 1.0}};
    EXPECT_THROW(fit_surface(Eigen::MatrixXd(0, 1), std::vector<double>{}, {}, m, PenaltySpec{}), ArgumentError);
    Eigen::MatrixXd pts(3, 1);
    pts << 0.1, 0.5, 0.9;
    EXPECT_THROW(fit_surface(pts, std::vector<double>{1.0, NAN, 2.0}, {}, m, PenaltySpec{}), ArgumentError);
}

TEST(FitSurface, IdenticalPointsAreAveraged) {
    Eigen::MatrixXd pts(4, 1);
    pts << 0.5, 0.5, 0.5, 0.5;
    const std::vector<BasisSpec> m{{3, 5, 0.0, 1.0}};
    const SmoothSurface s = fit_surface(pts, std::vector<double>{1.0, 3.0, 1.0, 3.0}, {}, m, PenaltySpec{});
    EXPECT_NEAR(s.evaluate(std::vector<double>{0.5}), 2.0, 1e-6);
}

TEST(FitSurface, Deterministic) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd pts(100, 2);
    std::vector<double> y(100);
    for (Eigen::Index i = 0; i < 100; ++i) {
        pts(i, 0) = u(rng);
        pts(i, 1) = u(rng);
        y[static_cast<std::size_t>(i)] = u(rng);
    }
    const std::vector<BasisSpec> m{{3, 6, 0.0, 1.0}, {3, 6, 0.0, 1.0}};
    const SmoothSurface a = fit_surface(pts, y, {}, m, PenaltySpec{});
    const SmoothSurface b = fit_surface(pts, y, {}, m, PenaltySpec{});
    EXPECT_TRUE(a.coefficients() == b.coefficients());
    EXPECT_EQ(a.selected_lambda(), b.selected_lambda());
}
