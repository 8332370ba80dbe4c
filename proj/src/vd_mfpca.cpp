#include "vdmfpca/vd_mfpca.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vdmfpca/errors.hpp"
#include "vdmfpca/linalg.hpp"
#include "vdmfpca/metrics.hpp"

namespace vdmfpca {

StackedScores stack_scores(std::span<const UnivariateVdFpcaFit> fits) {
    if (fits.empty()) {
        throw ArgumentError("stack_scores: no univariate fits");
    }
    StackedScores out;
    out.subject_ids = fits.front().subject_ids();
    out.domain_lengths = fits.front().domain_lengths();
    out.block_offsets.push_back(0);
    for (const auto& f : fits) {
        if (f.subject_ids() != out.subject_ids) {
            throw ArgumentError("stack_scores: fits cover different subjects");
        }
        out.variables.push_back(f.variable());
        out.block_offsets.push_back(out.block_offsets.back() + static_cast<int>(f.scores().cols()));
    }
    const auto n = static_cast<Eigen::Index>(out.subject_ids.size());
    out.scores.resize(n, out.block_offsets.back());
    for (std::size_t j = 0; j < fits.size(); ++j) {
        out.scores.middleCols(out.block_offsets[j], out.block_size(j)) = fits[j].scores();
    }
    return out;
}

std::vector<Eigen::MatrixXd> split_scores(const StackedScores& stacked) {
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t j = 0; j + 1 < stacked.block_offsets.size(); ++j) {
        out.emplace_back(stacked.scores.middleCols(stacked.block_offsets[j], stacked.block_size(j)));
    }
    return out;
}

ScoreCovarianceModel::ScoreCovarianceModel(int dim, std::vector<SmoothSurface> upper, double t_lo, double t_hi)
    : dim_(dim), upper_(std::move(upper)), t_lo_(t_lo), t_hi_(t_hi) {
    if (static_cast<int>(upper_.size()) != dim * (dim + 1) / 2) {
        throw ArgumentError("ScoreCovarianceModel: need K+(K+ + 1)/2 element smooths");
    }
}

ScoreCovarianceModel ScoreCovarianceModel::constant(const Eigen::MatrixXd& matrix, double domain_length) {
    if (matrix.rows() != matrix.cols()) {
        throw ArgumentError("constant score covariance must be square");
    }
    ScoreCovarianceModel m;
    m.dim_ = static_cast<int>(matrix.rows());
    m.t_lo_ = domain_length;
    m.t_hi_ = domain_length;
    m.constant_ = 0.5 * (matrix + matrix.transpose());
    return m;
}

bool ScoreCovarianceModel::contains(double domain_length) const {
    return domain_length >= t_lo_ && domain_length <= t_hi_;
}

Eigen::MatrixXd ScoreCovarianceModel::raw_at(double domain_length) const {
    if (!contains(domain_length)) {
        throw DomainError("domain length " + std::to_string(domain_length) + " outside score covariance range [" +
                          std::to_string(t_lo_) + ", " + std::to_string(t_hi_) + "]");
    }
    if (constant_) {
        return *constant_;
    }
    Eigen::MatrixXd c(dim_, dim_);
    const double p[1] = {domain_length};
    std::size_t e = 0;
    for (int j = 0; j < dim_; ++j) {
        for (int k = j; k < dim_; ++k) {
            const double v = upper_[e++].evaluate(p);
            c(j, k) = v;
            c(k, j) = v;
        }
    }
    return c;
}

ScoreCovarianceModel fit_score_covariance(const StackedScores& stacked, const SmootherConfig& config,
                                          bool center_scores) {
    const auto n = stacked.scores.rows();
    const int dim = stacked.total();
    if (n < 10) {
        throw ConfigError("score covariance smoothing needs at least 10 subjects");
    }
    const std::set<double> distinct(stacked.domain_lengths.begin(), stacked.domain_lengths.end());
    if (distinct.size() < 2) {
        throw ConfigError("all subjects share one domain length; use the fixed-domain path");
    }
    const BasisSpec margin = margin_for(stacked.domain_lengths, config.score_basis_T, config.degree);
    const std::vector<BasisSpec> margins{margin};
    Eigen::MatrixXd points(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        points(i, 0) = stacked.domain_lengths[static_cast<std::size_t>(i)];
    }

    Eigen::MatrixXd xi = stacked.scores;
    if (center_scores) {
        for (int k = 0; k < dim; ++k) {
            const Eigen::VectorXd col = xi.col(k);
            const SmoothSurface m = fit_surface(points, std::span<const double>(col.data(), static_cast<std::size_t>(n)),
                                                {}, margins, config.penalty);
            xi.col(k) -= m.evaluate(points);
        }
    }

    std::vector<SmoothSurface> upper;
    upper.reserve(static_cast<std::size_t>(dim * (dim + 1) / 2));
    Eigen::VectorXd y(n);
    for (int j = 0; j < dim; ++j) {
        for (int k = j; k < dim; ++k) {
            y = xi.col(j).cwiseProduct(xi.col(k));
            upper.push_back(fit_surface(points, std::span<const double>(y.data(), static_cast<std::size_t>(n)), {},
                                        margins, config.penalty));
        }
    }
    return ScoreCovarianceModel(dim, std::move(upper), margin.domain_lo, margin.domain_hi);
}

Eigen::MatrixXd eval_score_covariance(const ScoreCovarianceModel& model, double domain_length) {
    return psd_repair(model.raw_at(domain_length));
}

MultivariateEigen multivariate_eigen_at(const ScoreCovarianceModel& model, double domain_length,
                                        const ComponentRule& rule) {
    const SymmetricEigen eig = symmetric_eigen_desc(eval_score_covariance(model, domain_length));
    const Eigen::VectorXd values = eig.values.cwiseMax(0.0);
    const int m = rule.resolve(values);
    return MultivariateEigen{domain_length, values.head(m), eig.vectors.leftCols(m)};
}

Eigen::MatrixXd multivariate_scores(const StackedScores& stacked, std::span<const Eigen::MatrixXd> vectors) {
    const auto n = stacked.scores.rows();
    if (static_cast<Eigen::Index>(vectors.size()) != n) {
        throw ArgumentError("multivariate_scores: need one eigenvector matrix per subject");
    }
    if (n == 0) {
        return Eigen::MatrixXd(0, 0);
    }
    const auto m = vectors.front().cols();
    Eigen::MatrixXd rho(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& c = vectors[static_cast<std::size_t>(i)];
        if (c.rows() != stacked.total() || c.cols() != m) {
            throw ArgumentError("multivariate_scores: eigenvector dimension mismatch");
        }
        rho.row(i) = stacked.scores.row(i) * c;
    }
    return rho;
}

MultivariateEigenfunctions multivariate_eigenfunctions(std::span<const Eigenbasis> univariate,
                                                       const MultivariateEigen& eigen,
                                                       const std::vector<int>& block_offsets) {
    if (block_offsets.size() != univariate.size() + 1 || block_offsets.back() != eigen.vectors.rows()) {
        throw ArgumentError("multivariate_eigenfunctions: block layout does not match eigenvectors");
    }
    MultivariateEigenfunctions out;
    out.domain_length = eigen.domain_length;
    for (std::size_t j = 0; j < univariate.size(); ++j) {
        const Eigenbasis& b = univariate[j];
        if (b.domain_length != eigen.domain_length) {
            throw ArgumentError("multivariate_eigenfunctions: eigenvectors and eigenfunctions are at different T");
        }
        const int size = block_offsets[j + 1] - block_offsets[j];
        if (b.functions.cols() != size) {
            throw ArgumentError("multivariate_eigenfunctions: block size does not match univariate components");
        }
        out.grids.push_back(b.grid);
        out.weights.push_back(b.weights);
        out.functions.emplace_back(b.functions * eigen.vectors.middleRows(block_offsets[j], size));
    }
    return out;
}

std::size_t MultivariateVdFit::subject_index(const std::string& subject_id) const {
    const auto it = index_.find(subject_id);
    if (it == index_.end()) {
        throw LookupError("subject '" + subject_id + "' not in fit");
    }
    return it->second;
}

MultivariateEigen MultivariateVdFit::eigen_at(double domain_length) const {
    const auto it = eigen_.find(domain_length);
    if (it != eigen_.end()) {
        return it->second;
    }
    return multivariate_eigen_at(model_, domain_length, ComponentRule{num_components_});
}

MultivariateEigenfunctions MultivariateVdFit::eigenfunctions_at(double domain_length) const {
    std::vector<Eigenbasis> bases;
    bases.reserve(univariate_.size());
    for (const auto& u : univariate_) {
        bases.push_back(u.eigen_at(domain_length));
    }
    return multivariate_eigenfunctions(bases, eigen_at(domain_length), stacked_.block_offsets);
}

MultivariateVdFit fit_vd_mfpca(const FunctionalDataset& data, const MfpcaConfig& config) {
    data.validate();
    MultivariateVdFit fit;
    for (const auto& v : data.variables) {
        fit.univariate_.push_back(fit_vd_ufpca(data, v, config.univariate));
    }
    fit.stacked_ = stack_scores(fit.univariate_);
    for (std::size_t i = 0; i < fit.stacked_.subject_ids.size(); ++i) {
        fit.index_.emplace(fit.stacked_.subject_ids[i], i);
    }

    const std::set<double> distinct(fit.stacked_.domain_lengths.begin(), fit.stacked_.domain_lengths.end());
    if (distinct.size() < 2) {
        const auto n = static_cast<double>(fit.stacked_.scores.rows());
        const Eigen::MatrixXd second_moment = fit.stacked_.scores.transpose() * fit.stacked_.scores / n;
        fit.model_ = ScoreCovarianceModel::constant(second_moment, *distinct.begin());
    } else {
        fit.model_ = fit_score_covariance(fit.stacked_, config.univariate.smoother, config.center_scores);
    }

    const double median = median_domain_length(fit.stacked_.domain_lengths);
    const MultivariateEigen full = multivariate_eigen_at(fit.model_, median, ComponentRule{fit.stacked_.total()});
    ComponentRule rule = config.multivariate;
    rule.cap = std::min(rule.cap, fit.stacked_.total());
    fit.num_components_ = rule.resolve(full.values);
    if (fit.num_components_ < 1) {
        throw FitError("no multivariate components retained");
    }

    const ComponentRule fixed{fit.num_components_};
    for (double dl : distinct) {
        fit.eigen_.emplace(dl, multivariate_eigen_at(fit.model_, dl, fixed));
    }
    std::vector<Eigen::MatrixXd> per_subject;
    per_subject.reserve(fit.stacked_.domain_lengths.size());
    for (double dl : fit.stacked_.domain_lengths) {
        per_subject.push_back(fit.eigen_.at(dl).vectors);
    }
    fit.rho_ = multivariate_scores(fit.stacked_, per_subject);
    return fit;
}

std::vector<Series> reconstruct(const MultivariateVdFit& fit, const FunctionalDataset& data,
                                const std::string& subject_id, int m) {
    const std::size_t i = fit.subject_index(subject_id);
    if (m < 0 || m > fit.num_components()) {
        throw ArgumentError("reconstruct: M must lie in [0, retained components]");
    }
    const SubjectRecord& subject = data.subjects.at(data.subject_index(subject_id));
    const double dl = fit.stacked().domain_lengths[i];
    const MultivariateEigenfunctions psi = fit.eigenfunctions_at(dl);
    const Eigen::VectorXd rho = fit.scores().row(static_cast<Eigen::Index>(i)).head(m).transpose();

    std::vector<Series> out;
    for (std::size_t j = 0; j < fit.univariate().size(); ++j) {
        const Series& obs = subject.series.at(j);
        const Eigen::VectorXd on_grid = psi.functions[j].leftCols(m) * rho;
        const Eigen::Map<const Eigen::VectorXd> times(obs.time.data(), static_cast<Eigen::Index>(obs.time.size()));
        const Eigen::VectorXd at_obs = interpolate_linear(
            std::span<const double>(psi.grids[j].data(), static_cast<std::size_t>(psi.grids[j].size())),
            std::span<const double>(on_grid.data(), static_cast<std::size_t>(on_grid.size())), times);
        Series rec{obs.time, std::vector<double>(obs.time.size())};
        for (std::size_t k = 0; k < obs.time.size(); ++k) {
            rec.value[k] = mean_at(fit.univariate()[j].mean_surface(), obs.time[k], dl) + at_obs(static_cast<Eigen::Index>(k));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<VarianceShare> variance_explained_curve(const ScoreCovarianceModel& model,
                                                    std::span<const double> t_grid, int m) {
    if (m < 0 || m > model.dim()) {
        throw ArgumentError("variance_explained_curve: M out of range");
    }
    std::vector<VarianceShare> out;
    for (double dl : t_grid) {
        const SymmetricEigen eig = symmetric_eigen_desc(eval_score_covariance(model, dl));
        const Eigen::VectorXd values = eig.values.cwiseMax(0.0);
        const double total = values.sum();
        for (int k = 0; k < m; ++k) {
            out.push_back({dl, k + 1, values(k), total > 0.0 ? values(k) / total : 0.0});
        }
    }
    return out;
}

std::vector<MultivariateEigen> eigen_path(const ScoreCovarianceModel& model, std::span<const double> t_grid, int m) {
    std::vector<MultivariateEigen> out;
    for (double dl : t_grid) {
        MultivariateEigen e = multivariate_eigen_at(model, dl, ComponentRule{m});
        if (!out.empty()) {
            const auto& prev = out.back().vectors;
            for (Eigen::Index c = 0; c < e.vectors.cols() && c < prev.cols(); ++c) {
                if (e.vectors.col(c).dot(prev.col(c)) < 0.0) {
                    e.vectors.col(c) *= -1.0;
                }
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<Association> score_domain_association(const Eigen::MatrixXd& scores,
                                                  std::span<const double> domain_lengths) {
    if (static_cast<Eigen::Index>(domain_lengths.size()) != scores.rows()) {
        throw ArgumentError("score_domain_association: one domain length per subject required");
    }
    std::vector<Association> out;
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
        const Eigen::VectorXd col = scores.col(c);
        const SpearmanResult r =
            spearman(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), domain_lengths);
        out.push_back({r.rho, r.p_value});
    }
    return out;
}

}  // namespace vdmfpca
