#include "vdmfpca/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "vdmfpca/errors.hpp"

namespace vdmfpca {

VectorXd domain_grid(double end, double step) {
    if (!(step > 0.0) || !std::isfinite(end) || end <= 0.0) {
        throw ArgumentError("domain_grid: need end > 0 and step > 0");
    }
    const double ratio = end / step;
    const auto full = static_cast<Eigen::Index>(std::floor(ratio + 1e-9));
    const bool exact = std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio);
    const Eigen::Index n = full + 1 + (exact ? 0 : 1);
    VectorXd grid(n);
    for (Eigen::Index i = 0; i <= full; ++i) {
        grid(i) = static_cast<double>(i) * step;
    }
    if (exact) {
        grid(full) = end;
    } else {
        grid(n - 1) = end;
    }
    return grid;
}

VectorXd trapezoid_weights(const VectorXd& grid) {
    const Eigen::Index n = grid.size();
    if (n < 2) {
        throw ArgumentError("trapezoid_weights: grid needs at least 2 points");
    }
    VectorXd w = VectorXd::Zero(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double h = grid(i + 1) - grid(i);
        if (!(h > 0.0)) {
            throw ArgumentError("trapezoid_weights: grid must be strictly increasing");
        }
        w(i) += 0.5 * h;
        w(i + 1) += 0.5 * h;
    }
    return w;
}

double trapezoid(const VectorXd& grid, const VectorXd& values) {
    if (grid.size() != values.size()) {
        throw ArgumentError("trapezoid: size mismatch");
    }
    return trapezoid_weights(grid).dot(values);
}

VectorXd interpolate_linear(std::span<const double> x, std::span<const double> y, const VectorXd& at,
                            Extrapolation mode) {
    if (x.size() != y.size() || x.empty()) {
        throw ArgumentError("interpolate_linear: x and y must be non-empty and of equal length");
    }
    VectorXd out(at.size());
    const std::size_t n = x.size();
    for (Eigen::Index i = 0; i < at.size(); ++i) {
        const double t = at(i);
        if (n == 1) {
            out(i) = y.front();
            continue;
        }
        if (t <= x.front() || t >= x.back()) {
            const bool left = t <= x.front();
            if (mode == Extrapolation::Constant) {
                out(i) = left ? y.front() : y.back();
            } else {
                const std::size_t a = left ? 0 : n - 2;
                out(i) = y[a] + (y[a + 1] - y[a]) * (t - x[a]) / (x[a + 1] - x[a]);
            }
            continue;
        }
        const auto it = std::upper_bound(x.begin(), x.end(), t);
        const std::size_t hi = static_cast<std::size_t>(it - x.begin());
        const std::size_t lo = hi - 1;
        const double a = (t - x[lo]) / (x[hi] - x[lo]);
        out(i) = (1.0 - a) * y[lo] + a * y[hi];
    }
    return out;
}

void fix_sign(Eigen::Ref<VectorXd> v) {
    if (v.size() == 0) {
        return;
    }
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > best) {
            best = std::abs(v(i));
            arg = i;
        }
    }
    if (v(arg) < 0.0) {
        v = -v;
    }
}

SymmetricEigen symmetric_eigen_desc(const MatrixXd& a) {
    if (a.rows() != a.cols()) {
        throw ArgumentError("symmetric_eigen_desc: matrix must be square");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) {
        throw FitError("symmetric eigendecomposition did not converge");
    }
    const Eigen::Index n = a.rows();
    SymmetricEigen out{VectorXd(n), MatrixXd(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = solver.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
        fix_sign(out.vectors.col(i));
    }
    return out;
}

MatrixXd psd_repair(const MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(0.5 * (a + a.transpose()));
    if (solver.info() != Eigen::Success) {
        throw FitError("psd_repair: eigendecomposition did not converge");
    }
    if (solver.eigenvalues().minCoeff() >= 0.0) {
        return 0.5 * (a + a.transpose());
    }
    const VectorXd clipped = solver.eigenvalues().cwiseMax(0.0);
    MatrixXd out = solver.eigenvectors() * clipped.asDiagonal() * solver.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

int count_for_pve(const VectorXd& eigenvalues_desc, double pve, int cap) {
    const auto n = static_cast<int>(eigenvalues_desc.size());
    if (n == 0 || cap < 1) {
        return 0;
    }
    const VectorXd pos = eigenvalues_desc.cwiseMax(0.0);
    const double total = pos.sum();
    const int limit = std::min(cap, n);
    if (!(total > 0.0)) {
        return 1;
    }
    double acc = 0.0;
    for (int k = 0; k < limit; ++k) {
        acc += pos(k);
        if (acc / total >= pve) {
            return k + 1;
        }
    }
    return limit;
}

}  // namespace vdmfpca
