#include "vdmfpca/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vdmfpca/errors.hpp"
#include "vdmfpca/linalg.hpp"

namespace vdmfpca {

BinAssignment assign_bins(std::span<const double> domain_lengths, int n_bins) {
    if (n_bins < 2) {
        throw ConfigError("binning needs at least 2 bins");
    }
    const std::set<double> distinct(domain_lengths.begin(), domain_lengths.end());
    if (static_cast<int>(distinct.size()) < n_bins) {
        throw ConfigError("fewer distinct domain lengths than bins");
    }
    const double lo = *distinct.begin();
    const double hi = *distinct.rbegin();
    const double width = (hi - lo) / n_bins;
    std::vector<double> edges(static_cast<std::size_t>(n_bins + 1));
    for (int k = 0; k < n_bins; ++k) {
        edges[static_cast<std::size_t>(k)] = lo + k * width;
    }
    edges.back() = hi;

    std::vector<std::vector<int>> raw(static_cast<std::size_t>(n_bins));
    for (std::size_t i = 0; i < domain_lengths.size(); ++i) {
        const double t = domain_lengths[i];
        const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, t);
        const auto b = static_cast<std::size_t>(it - (edges.begin() + 1));
        raw[b].push_back(static_cast<int>(i));
    }

    struct Group {
        double lo;
        double hi;
        std::vector<int> members;
    };
    BinAssignment out;
    out.n_bins_requested = n_bins;
    std::vector<Group> groups;
    std::optional<Group> carry;
    for (int b = 0; b < n_bins; ++b) {
        const auto bu = static_cast<std::size_t>(b);
        Group g{edges[bu], edges[bu + 1], raw[bu]};
        if (carry) {
            g.lo = carry->lo;
            g.members.insert(g.members.begin(), carry->members.begin(), carry->members.end());
            carry.reset();
        }
        if (g.members.size() >= 2) {
            groups.push_back(std::move(g));
            continue;
        }
        if (!groups.empty()) {
            out.notes.push_back("bin " + std::to_string(b + 1) + " has " + std::to_string(g.members.size()) +
                                " subject(s); merged into previous bin");
            groups.back().hi = g.hi;
            groups.back().members.insert(groups.back().members.end(), g.members.begin(), g.members.end());
        } else {
            out.notes.push_back("bin " + std::to_string(b + 1) + " has " + std::to_string(g.members.size()) +
                                " subject(s); merged into next bin");
            carry = std::move(g);
        }
    }
    if (carry) {
        groups.push_back(std::move(*carry));
    }

    out.subject_bin.assign(domain_lengths.size(), -1);
    out.edges.push_back(groups.front().lo);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto& members = groups[g].members;
        std::sort(members.begin(), members.end());
        double min_t = domain_lengths[static_cast<std::size_t>(members.front())];
        for (int i : members) {
            min_t = std::min(min_t, domain_lengths[static_cast<std::size_t>(i)]);
            out.subject_bin[static_cast<std::size_t>(i)] = static_cast<int>(g);
        }
        if (members.size() < 3) {
            out.notes.push_back("bin " + std::to_string(g + 1) + " has only " + std::to_string(members.size()) +
                                " subjects");
        }
        out.edges.push_back(groups[g].hi);
        out.truncation.push_back(min_t);
        out.members.push_back(members);
    }
    return out;
}

std::vector<BinDataset> truncate(const FunctionalDataset& data, const BinAssignment& assignment, double grid_step) {
    if (assignment.subject_bin.size() != data.subjects.size()) {
        throw ArgumentError("truncate: assignment does not cover the dataset");
    }
    const std::size_t p = data.variables.size();
    std::vector<BinDataset> out;
    for (int b = 0; b < assignment.n_bins(); ++b) {
        BinDataset bin;
        bin.bin = b;
        bin.truncation = assignment.truncation[static_cast<std::size_t>(b)];
        bin.grid = domain_grid(bin.truncation, grid_step);
        const double limit = bin.truncation * (1.0 + 1e-12);
        std::vector<std::vector<Eigen::VectorXd>> rows(p);
        for (int i : assignment.members[static_cast<std::size_t>(b)]) {
            const SubjectRecord& s = data.subjects[static_cast<std::size_t>(i)];
            std::vector<int> counts(p);
            bool usable = true;
            for (std::size_t j = 0; j < p; ++j) {
                const auto& t = s.series[j].time;
                counts[j] = static_cast<int>(std::upper_bound(t.begin(), t.end(), limit) - t.begin());
                usable = usable && counts[j] >= 2;
            }
            if (!usable) {
                bin.excluded.push_back(i);
                continue;
            }
            for (std::size_t j = 0; j < p; ++j) {
                const auto n = static_cast<std::size_t>(counts[j]);
                rows[j].push_back(interpolate_linear(std::span<const double>(s.series[j].time.data(), n),
                                                     std::span<const double>(s.series[j].value.data(), n), bin.grid,
                                                     Extrapolation::Linear));
            }
            bin.subjects.push_back(i);
            bin.kept_counts.push_back(std::move(counts));
        }
        for (std::size_t j = 0; j < p; ++j) {
            Eigen::MatrixXd m(static_cast<Eigen::Index>(rows[j].size()), bin.grid.size());
            for (std::size_t r = 0; r < rows[j].size(); ++r) {
                m.row(static_cast<Eigen::Index>(r)) = rows[j][r].transpose();
            }
            bin.values.push_back(std::move(m));
        }
        out.push_back(std::move(bin));
    }
    return out;
}

BinFit standard_mfpca(const BinDataset& bin, const BinnedConfig& config) {
    const auto n = static_cast<Eigen::Index>(bin.subjects.size());
    if (n < 2) {
        throw ArgumentError("standard_mfpca: need at least 2 subjects in the bin");
    }
    BinFit fit;
    fit.bin = bin.bin;
    fit.truncation = bin.truncation;
    fit.grid = bin.grid;
    fit.weights = trapezoid_weights(bin.grid);
    fit.subjects = bin.subjects;
    const VectorXd sw = fit.weights.cwiseSqrt();
    const auto g = bin.grid.size();

    std::vector<Eigen::MatrixXd> centered;
    std::vector<Eigen::MatrixXd> scores;
    fit.block_offsets.push_back(0);
    for (const auto& x : bin.values) {
        const VectorXd mean = x.colwise().mean().transpose();
        Eigen::MatrixXd xc = x.rowwise() - mean.transpose();
        const Eigen::MatrixXd cov = xc.transpose() * xc / static_cast<double>(n - 1);
        const SymmetricEigen eig = symmetric_eigen_desc(sw.asDiagonal() * cov * sw.asDiagonal());
        const VectorXd values = eig.values.cwiseMax(0.0);
        ComponentRule rule = config.univariate;
        rule.cap = std::min(rule.cap, static_cast<int>(n - 1));
        const int k = std::max(1, rule.resolve(values));
        const auto keep = static_cast<Eigen::Index>(std::max<Eigen::Index>(k, std::min<Eigen::Index>(config.univariate.cap, g)));
        Eigen::MatrixXd psi = sw.cwiseInverse().asDiagonal() * eig.vectors.leftCols(keep);
        for (Eigen::Index c = 0; c < keep; ++c) {
            fix_sign(psi.col(c));
        }
        scores.emplace_back(xc * fit.weights.asDiagonal() * psi.leftCols(k));
        fit.mean.push_back(mean);
        fit.eigenvalues.emplace_back(values.head(k));
        fit.eigenfunctions.push_back(std::move(psi));
        fit.block_offsets.push_back(fit.block_offsets.back() + k);
        centered.push_back(std::move(xc));
    }

    fit.stacked.resize(n, fit.block_offsets.back());
    for (std::size_t j = 0; j < scores.size(); ++j) {
        fit.stacked.middleCols(fit.block_offsets[j], scores[j].cols()) = scores[j];
    }
    fit.score_covariance = fit.stacked.transpose() * fit.stacked / static_cast<double>(n - 1);
    const SymmetricEigen mv = symmetric_eigen_desc(fit.score_covariance);
    const VectorXd mv_values = mv.values.cwiseMax(0.0);
    ComponentRule mrule = config.multivariate;
    mrule.cap = std::min(mrule.cap, static_cast<int>(fit.stacked.cols()));
    const int m = std::max(1, mrule.resolve(mv_values));
    fit.mv_eigenvalues = mv_values.head(m);
    fit.mv_eigenvectors = mv.vectors.leftCols(m);
    fit.mv_scores = fit.stacked * fit.mv_eigenvectors;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        const int k = fit.block_offsets[j + 1] - fit.block_offsets[j];
        fit.mv_eigenfunctions.emplace_back(fit.eigenfunctions[j].leftCols(k) *
                                           fit.mv_eigenvectors.middleRows(fit.block_offsets[j], k));
        Eigen::MatrixXd rec = fit.mv_scores * fit.mv_eigenfunctions[j].transpose();
        rec.rowwise() += fit.mean[j].transpose();
        fit.reconstruction.push_back(std::move(rec));
    }
    return fit;
}

BinnedMfpcaFit fit_binned(const FunctionalDataset& data, int n_bins, const BinnedConfig& config) {
    BinnedMfpcaFit out;
    out.assignment = assign_bins(data.domain_lengths(), n_bins);
    out.subject_fit.assign(data.subjects.size(), -1);
    out.subject_row.assign(data.subjects.size(), -1);
    for (const BinDataset& bin : truncate(data, out.assignment, config.grid_step)) {
        if (bin.subjects.size() < 2) {
            out.assignment.notes.push_back("bin " + std::to_string(bin.bin + 1) + " skipped: fewer than 2 usable subjects");
            continue;
        }
        const int idx = static_cast<int>(out.bins.size());
        out.bins.push_back(standard_mfpca(bin, config));
        for (std::size_t r = 0; r < bin.subjects.size(); ++r) {
            out.subject_fit[static_cast<std::size_t>(bin.subjects[r])] = idx;
            out.subject_row[static_cast<std::size_t>(bin.subjects[r])] = static_cast<int>(r);
        }
    }
    return out;
}

double binned_metrics_domain(const BinAssignment& assignment, int subject) {
    if (subject < 0 || static_cast<std::size_t>(subject) >= assignment.subject_bin.size()) {
        throw LookupError("subject index outside assignment");
    }
    return assignment.truncation[static_cast<std::size_t>(assignment.subject_bin[static_cast<std::size_t>(subject)])];
}

}  // namespace vdmfpca
