#include "vdmfpca/vd_ufpca.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vdmfpca/errors.hpp"
#include "vdmfpca/linalg.hpp"

namespace vdmfpca {

namespace {

// Time margin over [min(0, first time), max(last time, max T)]: eigen-grids
// start at 0 and run to the subject's T.
BasisSpec time_margin(double lo, double hi, int num_basis, int degree) {
    lo = std::min(0.0, lo);
    if (!(hi > lo)) {
        throw ConfigError("time axis has no spread");
    }
    const double pad = 1e-9 * (hi - lo);
    BasisSpec spec{degree, num_basis, lo - pad, hi + pad};
    spec.validate();
    return spec;
}

bool all_equal(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

int ComponentRule::resolve(const Eigen::VectorXd& eigenvalues_desc) const {
    const auto n = static_cast<int>(eigenvalues_desc.size());
    if (fixed) {
        if (*fixed < 0) {
            throw ConfigError("component count must be non-negative");
        }
        return std::min(*fixed, n);
    }
    if (!(pve > 0.0) || pve > 1.0) {
        throw ConfigError("PVE threshold must lie in (0, 1]");
    }
    return count_for_pve(eigenvalues_desc, pve, cap);
}

double median_domain_length(std::vector<double> lengths) {
    if (lengths.empty()) {
        throw ArgumentError("median of empty set");
    }
    std::sort(lengths.begin(), lengths.end());
    const std::size_t n = lengths.size();
    return n % 2 == 1 ? lengths[n / 2] : 0.5 * (lengths[n / 2 - 1] + lengths[n / 2]);
}

SmoothSurface estimate_mean(const FunctionalDataset& data, const std::string& variable, const SmootherConfig& config) {
    const std::size_t j = data.variable_index(variable);
    if (data.subjects.size() < 2) {
        throw ConfigError("mean surface needs at least 2 subjects to smooth over domain length");
    }
    std::vector<double> t;
    std::vector<double> dom;
    std::vector<double> x;
    for (const auto& s : data.subjects) {
        const auto& ser = s.series.at(j);
        for (std::size_t k = 0; k < ser.time.size(); ++k) {
            t.push_back(ser.time[k]);
            dom.push_back(s.domain_length);
            x.push_back(ser.value[k]);
        }
    }
    if (x.empty()) {
        throw ArgumentError("variable '" + variable + "' has no observations");
    }
    const double t_lo = *std::min_element(t.begin(), t.end());
    const double t_hi = std::max(*std::max_element(t.begin(), t.end()), *std::max_element(dom.begin(), dom.end()));
    const BasisSpec tm = time_margin(t_lo, t_hi, config.mean_basis_t, config.degree);

    const bool fixed_domain = all_equal(dom);
    std::vector<BasisSpec> margins{tm};
    MatrixXd points(static_cast<Eigen::Index>(x.size()), fixed_domain ? 1 : 2);
    for (std::size_t i = 0; i < x.size(); ++i) {
        points(static_cast<Eigen::Index>(i), 0) = t[i];
        if (!fixed_domain) {
            points(static_cast<Eigen::Index>(i), 1) = dom[i];
        }
    }
    if (!fixed_domain) {
        margins.push_back(margin_for(dom, config.mean_basis_T, config.degree));
    }
    return fit_surface(points, x, {}, margins, config.penalty);
}

double mean_at(const SmoothSurface& mean, double t, double domain_length) {
    if (mean.dims() == 1) {
        const double p[1] = {t};
        return mean.evaluate(p);
    }
    const double p[2] = {t, domain_length};
    return mean.evaluate(p);
}

CenteredData center(const FunctionalDataset& data, const std::string& variable, const SmoothSurface& mean) {
    const std::size_t j = data.variable_index(variable);
    CenteredData out;
    out.reserve(data.subjects.size());
    for (const auto& s : data.subjects) {
        const auto& ser = s.series.at(j);
        ResidualSeries r{s.subject_id, s.domain_length, ser.time, std::vector<double>(ser.value.size())};
        for (std::size_t k = 0; k < ser.time.size(); ++k) {
            r.value[k] = ser.value[k] - mean_at(mean, ser.time[k], s.domain_length);
        }
        out.push_back(std::move(r));
    }
    return out;
}

SmoothSurface estimate_covariance(const CenteredData& residuals, const SmootherConfig& config) {
    std::vector<const ResidualSeries*> usable;
    for (const auto& r : residuals) {
        if (r.time.size() >= 2) {
            usable.push_back(&r);
        }
    }
    if (usable.empty()) {
        throw FitError("no subject has 2 or more observations for the covariance smooth");
    }
    if (residuals.size() < 2) {
        throw ArgumentError("covariance smooth needs residuals from at least 2 subjects");
    }
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::vector<double> dom;
    for (const auto* r : usable) {
        t_lo = std::min(t_lo, r->time.front());
        t_hi = std::max({t_hi, r->time.back(), r->domain_length});
        dom.push_back(r->domain_length);
    }
    const int nb = config.cov_basis_t;
    const BasisSpec tm = time_margin(t_lo, t_hi, nb, config.degree);
    const bool fixed_domain = all_equal(dom);
    std::vector<BasisSpec> margins{tm, tm};
    int n_dom = 1;
    if (!fixed_domain) {
        margins.push_back(margin_for(dom, config.cov_basis_T, config.degree));
        n_dom = config.cov_basis_T;
    }
    const int nb2 = nb * nb;
    const int total = nb2 * n_dom;

    // Products r_j r_k enter with row kron(b_j, b_k, b_T). Summed over pairs,
    // the normal equations factor as kron(G x G - diag part, b_T b_T^T).
    NormalEquations system{MatrixXd::Zero(total, total), VectorXd::Zero(total), 0.0, 0.0};
    std::vector<double> dom_vals(static_cast<std::size_t>(config.degree + 1), 1.0);
    for (const auto* r : usable) {
        const MatrixXd b = bspline_design(tm, r->time);
        const Eigen::Map<const VectorXd> res(r->value.data(), static_cast<Eigen::Index>(r->value.size()));
        const MatrixXd g = b.transpose() * b;
        const VectorXd u = b.transpose() * res;
        MatrixXd a(nb2, nb2);
        VectorXd v(nb2);
        for (int p = 0; p < nb; ++p) {
            for (int q = 0; q < nb; ++q) {
                v(p * nb + q) = u(p) * u(q);
                for (int pp = 0; pp < nb; ++pp) {
                    for (int qq = 0; qq < nb; ++qq) {
                        a(p * nb + q, pp * nb + qq) = g(p, pp) * g(q, qq);
                    }
                }
            }
        }
        double sum_sq = res.squaredNorm();
        double sum_quartic = 0.0;
        for (Eigen::Index k = 0; k < res.size(); ++k) {
            sum_quartic += res(k) * res(k) * res(k) * res(k);
        }
        const auto n_i = static_cast<double>(res.size());
        if (config.include_diagonal) {
            system.yty += sum_sq * sum_sq;
            system.n_obs += n_i * n_i;
        } else {
            for (Eigen::Index k = 0; k < res.size(); ++k) {
                VectorXd bb(nb2);
                for (int p = 0; p < nb; ++p) {
                    for (int q = 0; q < nb; ++q) {
                        bb(p * nb + q) = b(k, p) * b(k, q);
                    }
                }
                a.noalias() -= bb * bb.transpose();
                v.noalias() -= res(k) * res(k) * bb;
            }
            system.yty += sum_sq * sum_sq - sum_quartic;
            system.n_obs += n_i * (n_i - 1.0);
        }

        int first = 0;
        if (!fixed_domain) {
            first = basis_values(margins[2], r->domain_length, dom_vals);
        }
        const auto nd = static_cast<int>(dom_vals.size());
        for (int i = 0; i < nb2; ++i) {
            for (int c = 0; c < (fixed_domain ? 1 : nd); ++c) {
                const int row = i * n_dom + first + c;
                const double wc = fixed_domain ? 1.0 : dom_vals[static_cast<std::size_t>(c)];
                system.rhs(row) += v(i) * wc;
                for (int k = 0; k < nb2; ++k) {
                    const double aik = a(i, k) * wc;
                    if (aik == 0.0) {
                        continue;
                    }
                    for (int e = 0; e < (fixed_domain ? 1 : nd); ++e) {
                        const double we = fixed_domain ? 1.0 : dom_vals[static_cast<std::size_t>(e)];
                        system.gram(row, k * n_dom + first + e) += aik * we;
                    }
                }
            }
        }
    }
    if (!(system.n_obs > 0.0)) {
        throw FitError("no off-diagonal residual products to smooth");
    }
    SmoothSurface raw = fit_normal_equations(system, margins, config.penalty);

    VectorXd coef = raw.coefficients();
    for (int p = 0; p < nb; ++p) {
        for (int q = p + 1; q < nb; ++q) {
            for (int c = 0; c < n_dom; ++c) {
                const int pq = (p * nb + q) * n_dom + c;
                const int qp = (q * nb + p) * n_dom + c;
                const double avg = 0.5 * (coef(pq) + coef(qp));
                coef(pq) = avg;
                coef(qp) = avg;
            }
        }
    }
    SmoothSurface sym(margins, std::move(coef), raw.selected_lambda(), raw.edf(), raw.gcv());
    sym.set_exchangeable(0, 1);
    return sym;
}

Eigen::MatrixXd covariance_on_grid(const SmoothSurface& cov, const Eigen::VectorXd& grid, double domain_length) {
    if (cov.dims() != 2 && cov.dims() != 3) {
        throw ArgumentError("covariance surface must have 2 or 3 margins");
    }
    const BasisSpec& tm = cov.margins()[0];
    const int nb = tm.num_basis;
    MatrixXd slice(nb, nb);
    if (cov.dims() == 3) {
        const BasisSpec& dm = cov.margins()[2];
        std::vector<double> vals(static_cast<std::size_t>(dm.degree + 1));
        const int first = basis_values(dm, domain_length, vals);
        const int nd = dm.num_basis;
        for (int p = 0; p < nb; ++p) {
            for (int q = 0; q < nb; ++q) {
                double acc = 0.0;
                for (std::size_t c = 0; c < vals.size(); ++c) {
                    acc += cov.coefficients()((p * nb + q) * nd + first + static_cast<int>(c)) * vals[c];
                }
                slice(p, q) = acc;
            }
        }
    } else {
        for (int p = 0; p < nb; ++p) {
            for (int q = 0; q < nb; ++q) {
                slice(p, q) = cov.coefficients()(p * nb + q);
            }
        }
    }
    const MatrixXd b = bspline_design(tm, std::span<const double>(grid.data(), static_cast<std::size_t>(grid.size())));
    MatrixXd gamma = b * slice * b.transpose();
    return 0.5 * (gamma + gamma.transpose());
}

Eigenbasis eigendecompose_at(const SmoothSurface& cov, double domain_length, double grid_step,
                             const ComponentRule& rule) {
    if (!(grid_step > 0.0)) {
        throw ArgumentError("grid step must be positive");
    }
    if (cov.dims() == 3 && !cov.margins()[2].contains(domain_length)) {
        throw DomainError("domain length " + std::to_string(domain_length) + " outside fitted range");
    }
    Eigenbasis out;
    out.domain_length = domain_length;
    out.grid = domain_grid(domain_length, grid_step);
    if (out.grid.size() < 3) {
        throw ArgumentError("eigen-grid needs at least 3 points");
    }
    out.weights = trapezoid_weights(out.grid);
    const MatrixXd gamma = covariance_on_grid(cov, out.grid, domain_length);
    const VectorXd sw = out.weights.cwiseSqrt();
    const MatrixXd weighted = sw.asDiagonal() * gamma * sw.asDiagonal();
    const SymmetricEigen eig = symmetric_eigen_desc(weighted);
    const VectorXd values = eig.values.cwiseMax(0.0);
    const int k = rule.resolve(values);
    out.eigenvalues = values.head(k);
    out.functions = sw.cwiseInverse().asDiagonal() * eig.vectors.leftCols(k);
    for (int c = 0; c < k; ++c) {
        fix_sign(out.functions.col(c));
    }
    return out;
}

Eigen::MatrixXd compute_scores(const CenteredData& residuals, const std::map<double, Eigenbasis>& bases) {
    if (residuals.empty()) {
        return MatrixXd(0, 0);
    }
    Eigen::Index k = -1;
    MatrixXd scores;
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        const auto& r = residuals[i];
        const auto it = bases.find(r.domain_length);
        if (it == bases.end()) {
            throw DomainError("no eigenbasis for subject '" + r.subject_id + "' at T = " +
                              std::to_string(r.domain_length));
        }
        const Eigenbasis& basis = it->second;
        if (k < 0) {
            k = basis.functions.cols();
            scores = MatrixXd::Zero(static_cast<Eigen::Index>(residuals.size()), k);
        } else if (basis.functions.cols() != k) {
            throw ArgumentError("eigenbases differ in component count");
        }
        if (r.time.empty()) {
            continue;
        }
        const VectorXd on_grid = interpolate_linear(r.time, r.value, basis.grid, Extrapolation::Linear);
        scores.row(static_cast<Eigen::Index>(i)) = (basis.functions.transpose() * on_grid.cwiseProduct(basis.weights)).transpose();
    }
    return scores;
}

Eigenbasis UnivariateVdFpcaFit::eigen_at(double domain_length) const {
    const auto it = bases_.find(domain_length);
    if (it != bases_.end()) {
        return it->second;
    }
    return eigendecompose_at(cov_, domain_length, grid_step_, ComponentRule{num_components_});
}

UnivariateVdFpcaFit fit_vd_ufpca(const FunctionalDataset& data, const std::string& variable,
                                 const UfpcaConfig& config) {
    UnivariateVdFpcaFit fit;
    fit.variable_ = variable;
    fit.grid_step_ = config.grid_step;
    fit.mean_ = estimate_mean(data, variable, config.smoother);
    const CenteredData residuals = center(data, variable, fit.mean_);
    fit.cov_ = estimate_covariance(residuals, config.smoother);

    fit.domain_lengths_ = data.domain_lengths();
    for (const auto& s : data.subjects) {
        fit.subject_ids_.push_back(s.subject_id);
    }
    const double median = median_domain_length(fit.domain_lengths_);
    const Eigenbasis at_median = eigendecompose_at(fit.cov_, median, config.grid_step,
                                                   ComponentRule{std::nullopt, 1.0, 1 << 20});
    fit.num_components_ = config.components.resolve(at_median.eigenvalues);
    if (fit.num_components_ < 1) {
        throw FitError("no components retained for variable '" + variable + "'");
    }

    const ComponentRule fixed{fit.num_components_};
    const std::set<double> distinct(fit.domain_lengths_.begin(), fit.domain_lengths_.end());
    for (double dl : distinct) {
        fit.bases_.emplace(dl, eigendecompose_at(fit.cov_, dl, config.grid_step, fixed));
    }
    fit.scores_ = compute_scores(residuals, fit.bases_);
    return fit;
}

}  // namespace vdmfpca
