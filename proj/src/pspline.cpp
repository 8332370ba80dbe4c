#include "vdmfpca/pspline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "vdmfpca/errors.hpp"

namespace vdmfpca {

namespace {

constexpr int kMaxDims = 3;

struct TensorRow {
    std::vector<int> index;
    std::vector<double> value;
};

// Non-zero entries of the tensor-product row at `point` (row-major flattening).
void tensor_row(const std::vector<BasisSpec>& margins, std::span<const double> point, TensorRow& row) {
    std::array<int, kMaxDims> first{};
    std::array<std::vector<double>, kMaxDims> vals;
    std::size_t count = 1;
    for (std::size_t d = 0; d < margins.size(); ++d) {
        vals[d].resize(static_cast<std::size_t>(margins[d].degree + 1));
        first[d] = basis_values(margins[d], point[d], vals[d]);
        count *= vals[d].size();
    }
    row.index.assign(count, 0);
    row.value.assign(count, 1.0);
    int stride_index = 1;
    for (std::size_t d = margins.size(); d-- > 0;) {
        const std::size_t nd = vals[d].size();
        std::size_t inner = 1;
        for (std::size_t e = d + 1; e < margins.size(); ++e) {
            inner *= vals[e].size();
        }
        for (std::size_t r = 0; r < count; ++r) {
            const std::size_t local = (r / inner) % nd;
            row.index[r] += (first[d] + static_cast<int>(local)) * stride_index;
            row.value[r] *= vals[d][local];
        }
        stride_index *= margins[d].num_basis;
    }
}

int total_basis(const std::vector<BasisSpec>& margins) {
    int n = 1;
    for (const auto& m : margins) {
        n *= m.num_basis;
    }
    return n;
}

void check_margins(const std::vector<BasisSpec>& margins) {
    if (margins.empty() || margins.size() > kMaxDims) {
        throw ConfigError("smoother supports 1 to 3 margins");
    }
    for (const auto& m : margins) {
        m.validate();
    }
}

}  // namespace

void BasisSpec::validate() const {
    if (degree < 0) {
        throw ConfigError("basis degree must be non-negative");
    }
    if (num_basis < degree + 1) {
        std::ostringstream msg;
        msg << "num_basis (" << num_basis << ") must be at least degree + 1 (" << degree + 1 << ")";
        throw ConfigError(msg.str());
    }
    if (!(domain_lo < domain_hi) || !std::isfinite(domain_lo) || !std::isfinite(domain_hi)) {
        throw ConfigError("basis domain must satisfy lo < hi");
    }
}

BasisSpec margin_for(std::span<const double> coords, int num_basis, int degree) {
    if (coords.empty()) {
        throw ArgumentError("margin_for: no coordinates");
    }
    const auto [lo_it, hi_it] = std::minmax_element(coords.begin(), coords.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) {
        throw ConfigError("margin_for: coordinate has no spread");
    }
    const double pad = 1e-9 * (hi - lo);
    BasisSpec spec{degree, num_basis, lo - pad, hi + pad};
    spec.validate();
    return spec;
}

std::vector<double> log_lambda_grid(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi >= lo) || n < 1) {
        throw ConfigError("lambda grid needs 0 < lo <= hi and n >= 1");
    }
    std::vector<double> grid(static_cast<std::size_t>(n));
    if (n == 1) {
        grid[0] = lo;
        return grid;
    }
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (int i = 0; i < n; ++i) {
        grid[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (n - 1));
    }
    return grid;
}

std::vector<double> default_lambda_grid() { return log_lambda_grid(1e-4, 1e6, 20); }

void PenaltySpec::validate() const {
    if (order < 1) {
        throw ConfigError("penalty order must be >= 1");
    }
    if (lambda_grid.empty()) {
        throw ConfigError("lambda grid is empty");
    }
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        if (!(lambda_grid[i] > 0.0) || !std::isfinite(lambda_grid[i])) {
            throw ConfigError("lambda grid values must be positive and finite");
        }
        if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1])) {
            throw ConfigError("lambda grid must be sorted ascending");
        }
    }
}

int basis_values(const BasisSpec& spec, double x, std::span<double> out) {
    const int p = spec.degree;
    if (static_cast<int>(out.size()) != p + 1) {
        throw ArgumentError("basis_values: output span must hold degree + 1 values");
    }
    if (!spec.contains(x) || !std::isfinite(x)) {
        std::ostringstream msg;
        msg << "point " << x << " outside basis domain [" << spec.domain_lo << ", " << spec.domain_hi << "]";
        throw DomainError(msg.str());
    }
    const double h = spec.spacing();
    const int n_int = spec.num_intervals();
    int j = static_cast<int>(std::floor((x - spec.domain_lo) / h));
    j = std::clamp(j, 0, n_int - 1);
    // knot(i) = lo + (i - p) h; x lies in [knot(j + p), knot(j + p + 1)).
    auto knot = [&](int i) { return spec.domain_lo + static_cast<double>(i - p) * h; };
    const int span = j + p;
    std::vector<double> left(static_cast<std::size_t>(p + 1));
    std::vector<double> right(static_cast<std::size_t>(p + 1));
    out[0] = 1.0;
    for (int r = 1; r <= p; ++r) {
        left[static_cast<std::size_t>(r)] = x - knot(span + 1 - r);
        right[static_cast<std::size_t>(r)] = knot(span + r) - x;
        double saved = 0.0;
        for (int s = 0; s < r; ++s) {
            const double denom = right[static_cast<std::size_t>(s + 1)] + left[static_cast<std::size_t>(r - s)];
            const double tmp = out[static_cast<std::size_t>(s)] / denom;
            out[static_cast<std::size_t>(s)] = saved + right[static_cast<std::size_t>(s + 1)] * tmp;
            saved = left[static_cast<std::size_t>(r - s)] * tmp;
        }
        out[static_cast<std::size_t>(r)] = saved;
    }
    return j;
}

MatrixXd bspline_design(const BasisSpec& spec, std::span<const double> points) {
    spec.validate();
    MatrixXd design = MatrixXd::Zero(static_cast<Eigen::Index>(points.size()), spec.num_basis);
    std::vector<double> vals(static_cast<std::size_t>(spec.degree + 1));
    for (std::size_t i = 0; i < points.size(); ++i) {
        const int first = basis_values(spec, points[i], vals);
        for (int r = 0; r <= spec.degree; ++r) {
            design(static_cast<Eigen::Index>(i), first + r) = vals[static_cast<std::size_t>(r)];
        }
    }
    return design;
}

MatrixXd difference_penalty(int num_basis, int order) {
    if (order < 1) {
        throw ConfigError("difference order must be >= 1");
    }
    if (num_basis <= order) {
        throw ConfigError("difference penalty needs num_basis > order");
    }
    MatrixXd d = MatrixXd::Identity(num_basis, num_basis);
    for (int k = 0; k < order; ++k) {
        MatrixXd next(d.rows() - 1, num_basis);
        for (Eigen::Index r = 0; r + 1 < d.rows(); ++r) {
            next.row(r) = d.row(r + 1) - d.row(r);
        }
        d = std::move(next);
    }
    return d.transpose() * d;
}

MatrixXd tensor_penalty(const std::vector<BasisSpec>& margins, int order) {
    check_margins(margins);
    const int total = total_basis(margins);
    MatrixXd out = MatrixXd::Zero(total, total);
    for (std::size_t d = 0; d < margins.size(); ++d) {
        int outer = 1;
        for (std::size_t e = 0; e < d; ++e) {
            outer *= margins[e].num_basis;
        }
        int inner = 1;
        for (std::size_t e = d + 1; e < margins.size(); ++e) {
            inner *= margins[e].num_basis;
        }
        const int nd = margins[d].num_basis;
        const MatrixXd pd = difference_penalty(nd, order);
        for (int o = 0; o < outer; ++o) {
            for (int a = 0; a < nd; ++a) {
                for (int b = 0; b < nd; ++b) {
                    if (pd(a, b) == 0.0) {
                        continue;
                    }
                    for (int i = 0; i < inner; ++i) {
                        out((o * nd + a) * inner + i, (o * nd + b) * inner + i) += pd(a, b);
                    }
                }
            }
        }
    }
    return out;
}

SmoothSurface::SmoothSurface(std::vector<BasisSpec> margins, VectorXd coefficients,
                             std::vector<double> selected_lambda, double edf, double gcv)
    : margins_(std::move(margins)),
      coefficients_(std::move(coefficients)),
      selected_lambda_(std::move(selected_lambda)),
      edf_(edf),
      gcv_(gcv) {
    check_margins(margins_);
    if (coefficients_.size() != total_basis(margins_)) {
        throw ArgumentError("SmoothSurface: coefficient count does not match basis dimension");
    }
}

void SmoothSurface::set_exchangeable(int axis_a, int axis_b) {
    if (axis_a < 0 || axis_b < 0 || axis_a >= dims() || axis_b >= dims() || axis_a == axis_b) {
        throw ArgumentError("set_exchangeable: invalid axes");
    }
    const auto& ma = margins_[static_cast<std::size_t>(axis_a)];
    const auto& mb = margins_[static_cast<std::size_t>(axis_b)];
    if (ma.degree != mb.degree || ma.num_basis != mb.num_basis || ma.domain_lo != mb.domain_lo ||
        ma.domain_hi != mb.domain_hi) {
        throw ArgumentError("set_exchangeable: margins differ");
    }
    exchangeable_ = std::make_pair(axis_a, axis_b);
}

bool SmoothSurface::contains(std::span<const double> point) const {
    if (static_cast<int>(point.size()) != dims()) {
        return false;
    }
    for (std::size_t d = 0; d < margins_.size(); ++d) {
        if (!margins_[d].contains(point[d])) {
            return false;
        }
    }
    return true;
}

double SmoothSurface::evaluate_raw(std::span<const double> point) const {
    thread_local TensorRow row;
    tensor_row(margins_, point, row);
    double acc = 0.0;
    for (std::size_t r = 0; r < row.index.size(); ++r) {
        acc += coefficients_(row.index[r]) * row.value[r];
    }
    return acc;
}

double SmoothSurface::evaluate(std::span<const double> point) const {
    if (static_cast<int>(point.size()) != dims()) {
        throw ArgumentError("evaluate: point dimension does not match surface");
    }
    if (!exchangeable_) {
        return evaluate_raw(point);
    }
    std::array<double, kMaxDims> swapped{};
    std::copy(point.begin(), point.end(), swapped.begin());
    std::swap(swapped[static_cast<std::size_t>(exchangeable_->first)],
              swapped[static_cast<std::size_t>(exchangeable_->second)]);
    return 0.5 * (evaluate_raw(point) + evaluate_raw(std::span<const double>(swapped.data(), point.size())));
}

VectorXd SmoothSurface::evaluate(const MatrixXd& points) const {
    if (points.cols() != dims()) {
        throw ArgumentError("evaluate: point dimension does not match surface");
    }
    VectorXd out(points.rows());
    std::array<double, kMaxDims> buf{};
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        for (int d = 0; d < dims(); ++d) {
            buf[static_cast<std::size_t>(d)] = points(i, d);
        }
        out(i) = evaluate(std::span<const double>(buf.data(), static_cast<std::size_t>(dims())));
    }
    return out;
}

VectorXd eval_surface(const SmoothSurface& surface, const MatrixXd& points) { return surface.evaluate(points); }

SmoothSurface fit_normal_equations(const NormalEquations& system, const std::vector<BasisSpec>& margins,
                                   const PenaltySpec& penalty,
                                   const std::function<double(const VectorXd&)>& exact_rss, SmoothingPath* path) {
    check_margins(margins);
    penalty.validate();
    const int k = total_basis(margins);
    if (system.gram.rows() != k || system.gram.cols() != k || system.rhs.size() != k) {
        throw ArgumentError("normal equations do not match basis dimension");
    }
    if (!(system.n_obs > 0.0)) {
        throw ArgumentError("no observations to fit");
    }

    // Simultaneous diagonalisation of (F, P) through M = F + s P = L L^T:
    // L^{-1} s P L^{-T} = U S U^T, so F + lambda P = L U diag(1 - S + (lambda/s) S) U^T L^T.
    const MatrixXd pen = tensor_penalty(margins, penalty.order);
    const double ftrace = system.gram.trace();
    const double scale = ftrace > 0.0 ? ftrace / pen.trace() : 1.0;
    MatrixXd m = system.gram + scale * pen;
    Eigen::LLT<MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        m.diagonal().array() += 1e-10 * std::max(ftrace, 1.0) / k;
        llt.compute(m);
        if (llt.info() != Eigen::Success) {
            throw FitError("penalized system is not positive definite");
        }
    }
    const auto lower = llt.matrixL();
    MatrixXd x = lower.solve(scale * pen);
    MatrixXd a = lower.solve(x.transpose());
    a = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a);
    if (eig.info() != Eigen::Success) {
        throw FitError("penalty eigendecomposition did not converge");
    }
    const VectorXd s = eig.eigenvalues().cwiseMax(0.0).cwiseMin(1.0);
    const MatrixXd& u = eig.eigenvectors();
    const VectorXd z = u.transpose() * lower.solve(system.rhs);
    const auto upper = llt.matrixU();

    auto coefficients_at = [&](const VectorXd& d) -> VectorXd {
        const VectorXd w = u * z.cwiseQuotient(d);
        return upper.solve(w);
    };

    SmoothingPath local;
    SmoothingPath& trace = path ? *path : local;
    trace = SmoothingPath{};
    double best = std::numeric_limits<double>::infinity();
    VectorXd best_coef;
    double best_edf = 0.0;
    for (std::size_t g = 0; g < penalty.lambda_grid.size(); ++g) {
        const double lambda = penalty.lambda_grid[g];
        const VectorXd d = (VectorXd::Ones(k) - s) + (lambda / scale) * s;
        const double edf = ((VectorXd::Ones(k) - s).cwiseQuotient(d)).sum();
        VectorXd coef = coefficients_at(d);
        double rss = 0.0;
        if (exact_rss) {
            rss = exact_rss(coef);
        } else {
            const VectorXd z2 = z.cwiseProduct(z);
            const VectorXd factor = (2.0 * d - (VectorXd::Ones(k) - s)).cwiseQuotient(d.cwiseProduct(d));
            rss = std::max(0.0, system.yty - z2.dot(factor));
        }
        const double dof = system.n_obs - edf;
        const double gcv =
            dof > 0.0 ? system.n_obs * rss / (dof * dof) : std::numeric_limits<double>::infinity();
        trace.lambda.push_back(lambda);
        trace.gcv.push_back(gcv);
        trace.edf.push_back(edf);
        trace.rss.push_back(rss);
        if (gcv < best || best_coef.size() == 0) {
            best = gcv;
            best_coef = std::move(coef);
            best_edf = edf;
            trace.selected = g;
        }
    }
    const double chosen = penalty.lambda_grid[trace.selected];
    return SmoothSurface(margins, std::move(best_coef), std::vector<double>(margins.size(), chosen), best_edf, best);
}

SmoothSurface fit_surface(const MatrixXd& points, std::span<const double> values, std::span<const double> weights,
                          const std::vector<BasisSpec>& margins, const PenaltySpec& penalty, SmoothingPath* path) {
    check_margins(margins);
    penalty.validate();
    if (values.empty() || points.rows() == 0) {
        throw ArgumentError("fit_surface: empty input");
    }
    if (points.rows() != static_cast<Eigen::Index>(values.size())) {
        throw ArgumentError("fit_surface: points and values differ in length");
    }
    if (points.cols() != static_cast<Eigen::Index>(margins.size())) {
        throw ArgumentError("fit_surface: point dimension does not match margins");
    }
    if (!weights.empty() && weights.size() != values.size()) {
        throw ArgumentError("fit_surface: weights and values differ in length");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw ArgumentError("fit_surface: non-finite value");
        }
        if (!weights.empty() && (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))) {
            throw ArgumentError("fit_surface: weights must be finite and non-negative");
        }
    }

    const int k = total_basis(margins);
    const auto n = static_cast<std::size_t>(points.rows());
    const std::size_t d = margins.size();
    std::vector<TensorRow> rows(n);
    NormalEquations system{MatrixXd::Zero(k, k), VectorXd::Zero(k), 0.0, static_cast<double>(n)};
    std::array<double, kMaxDims> buf{};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            buf[c] = points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        }
        tensor_row(margins, std::span<const double>(buf.data(), d), rows[i]);
        const double w = weights.empty() ? 1.0 : weights[i];
        const auto& row = rows[i];
        for (std::size_t a = 0; a < row.index.size(); ++a) {
            const double wa = w * row.value[a];
            system.rhs(row.index[a]) += wa * values[i];
            for (std::size_t b = 0; b < row.index.size(); ++b) {
                system.gram(row.index[a], row.index[b]) += wa * row.value[b];
            }
        }
        system.yty += w * values[i] * values[i];
    }

    auto rss = [&](const VectorXd& coef) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double fit = 0.0;
            for (std::size_t a = 0; a < rows[i].index.size(); ++a) {
                fit += coef(rows[i].index[a]) * rows[i].value[a];
            }
            const double r = values[i] - fit;
            acc += (weights.empty() ? 1.0 : weights[i]) * r * r;
        }
        return acc;
    };
    return fit_normal_equations(system, margins, penalty, rss, path);
}

}  // namespace vdmfpca
