#include "vdmfpca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "vdmfpca/errors.hpp"

namespace vdmfpca {

double rmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate) {
    if (truth.size() != estimate.size()) {
        throw ArgumentError("rmse: size mismatch");
    }
    if (truth.size() == 0) {
        throw ArgumentError("rmse: empty evaluation set");
    }
    return std::sqrt((truth - estimate).squaredNorm() / static_cast<double>(truth.size()));
}

double armse_x(std::span<const Eigen::VectorXd> truth, std::span<const Eigen::VectorXd> reconstruction) {
    if (truth.size() != reconstruction.size() || truth.empty()) {
        throw ArgumentError("armse_x: need one truth and one reconstruction per subject");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        acc += rmse(truth[i], reconstruction[i]);
    }
    return acc / static_cast<double>(truth.size());
}

Eigen::VectorXd align_sign(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate, const Eigen::VectorXd& times) {
    if (truth.size() != estimate.size() || truth.size() != times.size()) {
        throw ArgumentError("align_sign: size mismatch");
    }
    double inner = 0.0;
    if (times.size() == 1) {
        inner = truth(0) * estimate(0);
    } else {
        for (Eigen::Index k = 0; k + 1 < times.size(); ++k) {
            const double h = times(k + 1) - times(k);
            inner += 0.5 * h * (truth(k) * estimate(k) + truth(k + 1) * estimate(k + 1));
        }
    }
    return inner < 0.0 ? Eigen::VectorXd(-estimate) : estimate;
}

double armse_pc(std::span<const Eigen::MatrixXd> truth, std::span<const Eigen::MatrixXd> estimate,
                std::span<const Eigen::VectorXd> times, int component) {
    if (truth.size() != estimate.size() || truth.size() != times.size() || truth.empty()) {
        throw ArgumentError("armse_pc: need truth, estimate and times per subject");
    }
    if (component < 1) {
        throw ArgumentError("armse_pc: component index is 1-based");
    }
    const Eigen::Index c = component - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (c >= truth[i].cols() || c >= estimate[i].cols()) {
            throw ArgumentError("armse_pc: component " + std::to_string(component) + " not available");
        }
        const Eigen::VectorXd t = truth[i].col(c);
        acc += rmse(t, align_sign(t, estimate[i].col(c), times[i]));
    }
    return acc / static_cast<double>(truth.size());
}

CellSummary summarize(std::span<const double> values) {
    CellSummary out;
    out.n = values.size();
    if (values.empty()) {
        return out;
    }
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - out.mean) * (v - out.mean);
        }
        out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

Eigen::VectorXd average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    Eigen::VectorXd ranks(static_cast<Eigen::Index>(n));
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks(static_cast<Eigen::Index>(order[k])) = rank;
        }
        i = j + 1;
    }
    return ranks;
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw ArgumentError("spearman: size mismatch");
    }
    if (x.size() < 3) {
        throw ArgumentError("spearman: need at least 3 pairs");
    }
    const Eigen::VectorXd rx = average_ranks(x);
    const Eigen::VectorXd ry = average_ranks(y);
    const Eigen::VectorXd cx = rx.array() - rx.mean();
    const Eigen::VectorXd cy = ry.array() - ry.mean();
    const double denom = std::sqrt(cx.squaredNorm() * cy.squaredNorm());
    if (!(denom > 0.0)) {
        throw ArgumentError("spearman: correlation undefined for constant input");
    }
    SpearmanResult out;
    out.rho = std::clamp(cx.dot(cy) / denom, -1.0, 1.0);
    const double df = static_cast<double>(x.size()) - 2.0;
    if (std::abs(out.rho) >= 1.0) {
        out.p_value = 0.0;
        return out;
    }
    const double t = out.rho * std::sqrt(df / (1.0 - out.rho * out.rho));
    const boost::math::students_t dist(df);
    out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
    return out;
}

}  // namespace vdmfpca
