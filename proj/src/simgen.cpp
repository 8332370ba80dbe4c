#include "vdmfpca/simgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "vdmfpca/errors.hpp"

namespace vdmfpca {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(base);
    for (std::uint64_t p : path) {
        s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
    }
    return s;
}

std::uint64_t hash_label(const std::string& label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_string(DomainDistribution dist) {
    return dist == DomainDistribution::Uniform ? "uniform" : "nbinom";
}

DomainDistribution parse_distribution(const std::string& name) {
    std::string lower;
    for (unsigned char c : name) {
        lower.push_back(static_cast<char>(std::tolower(c)));
    }
    if (lower == "uniform" || lower == "d1") {
        return DomainDistribution::Uniform;
    }
    if (lower == "nbinom" || lower == "geometric" || lower == "d2") {
        return DomainDistribution::BoundedGeometric;
    }
    throw ConfigError("unknown domain distribution '" + name + "'");
}

void SimConfig::validate() const {
    if (n_subjects < 2) {
        throw ConfigError("simulation needs at least 2 subjects");
    }
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("noise SD must be non-negative");
    }
    if (n_components < 1 || n_components > 10) {
        throw ConfigError("n_components must lie in [1, 10]");
    }
    if (fixed_domain && *fixed_domain < kMinDomain) {
        throw ConfigError("fixed domain length must be at least 10");
    }
}

std::vector<int> sample_domains(DomainDistribution dist, int n, std::mt19937_64& rng) {
    std::vector<int> out(static_cast<std::size_t>(std::max(n, 0)));
    if (dist == DomainDistribution::Uniform) {
        std::uniform_int_distribution<int> u(kMinDomain, kMaxDomain);
        for (auto& t : out) {
            t = u(rng);
        }
    } else {
        std::geometric_distribution<int> g(kGeometricP);
        for (auto& t : out) {
            t = kMinDomain + std::min(g(rng), kMaxDomain - kMinDomain);
        }
    }
    return out;
}

double bounded_geometric_mean(double p) {
    const int cap = kMaxDomain - kMinDomain;
    double mean = 0.0;
    double mass = 0.0;
    for (int g = 0; g < cap; ++g) {
        const double pg = std::pow(1.0 - p, g) * p;
        mean += g * pg;
        mass += pg;
    }
    mean += cap * (1.0 - mass);
    return kMinDomain + mean;
}

double sim_mean1(double t) { return 0.0001 * (t - 120.0) * (t - 120.0) + 3.0 * std::sin(std::numbers::pi * t / 60.0); }

double sim_mean2(double t) { return 0.0001 * (t - 20.0) * (t - 20.0) + 3.0 * std::sin(std::numbers::pi * t / 60.0); }

double normal_cdf(double x, double mu, double sd) { return 0.5 * std::erfc(-(x - mu) / (sd * std::numbers::sqrt2)); }

double type2_weight(double domain_length) { return normal_cdf(domain_length, 30.0, 10.0); }

Eigen::MatrixXd eigenfunctions_type1(double domain_length, const Eigen::VectorXd& times, int n) {
    const double scale = std::numbers::sqrt2 / std::sqrt(domain_length);
    Eigen::MatrixXd out(times.size(), n);
    for (int k = 1; k <= n; ++k) {
        const int j = (k + 1) / 2;
        for (Eigen::Index i = 0; i < times.size(); ++i) {
            const double arg = 2.0 * j * std::numbers::pi * times(i) / domain_length;
            out(i, k - 1) = (k % 2 == 1 ? std::sin(arg) : std::cos(arg)) * scale;
        }
    }
    return out;
}

Eigen::MatrixXd eigenfunctions_type2(double domain_length, const Eigen::VectorXd& times, int n) {
    const double scale = std::numbers::sqrt2 / std::sqrt(domain_length);
    const double w = type2_weight(domain_length);
    Eigen::MatrixXd out(times.size(), n);
    for (int j = 1; j <= n; ++j) {
        for (Eigen::Index i = 0; i < times.size(); ++i) {
            const double arg = 2.0 * j * std::numbers::pi * times(i) / domain_length;
            out(i, j - 1) = w * std::sin(arg) * scale + (1.0 - w) * std::cos(arg) * scale;
        }
    }
    return out;
}

Eigen::VectorXd observation_grid(int domain_length) {
    return Eigen::VectorXd::LinSpaced(domain_length, 1.0, static_cast<double>(domain_length));
}

std::pair<FunctionalDataset, SimTruth> generate(const SimConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const int n = config.n_subjects;
    const int nc = config.n_components;
    std::vector<int> domains;
    if (config.fixed_domain) {
        domains.assign(static_cast<std::size_t>(n), *config.fixed_domain);
    } else {
        domains = sample_domains(config.distribution, n, rng);
    }

    SimTruth truth;
    truth.eigenvalues.resize(nc);
    for (int k = 0; k < nc; ++k) {
        truth.eigenvalues(k) = std::pow(0.5, k);
    }

    FunctionalDataset data;
    data.variables = {"X1", "X2"};
    const int width = n < 10000 ? 4 : 6;
    for (int i = 0; i < n; ++i) {
        SubjectTruth s;
        char id[32];
        std::snprintf(id, sizeof(id), "S%0*d", width, i + 1);
        s.subject_id = id;
        s.domain_length = domains[static_cast<std::size_t>(i)];
        s.grid = observation_grid(s.domain_length);
        const double dl = s.domain_length;
        s.eigenfunctions[0] = eigenfunctions_type1(dl, s.grid, nc);
        s.eigenfunctions[1] = eigenfunctions_type2(dl, s.grid, nc);
        s.mean[0] = s.grid.unaryExpr([](double t) { return sim_mean1(t); });
        s.mean[1] = s.grid.unaryExpr([](double t) { return sim_mean2(t); });
        for (int j = 0; j < 2; ++j) {
            s.scores[static_cast<std::size_t>(j)].resize(nc);
            for (int k = 0; k < nc; ++k) {
                s.scores[static_cast<std::size_t>(j)](k) = std::sqrt(truth.eigenvalues(k)) * normal(rng);
            }
        }
        for (int j = 0; j < 2; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            s.noiseless[ju] = s.mean[ju] + s.eigenfunctions[ju] * s.scores[ju];
            s.noisy[ju] = s.noiseless[ju];
            if (config.sigma > 0.0) {
                for (Eigen::Index k = 0; k < s.noisy[ju].size(); ++k) {
                    s.noisy[ju](k) += config.sigma * normal(rng);
                }
            }
        }

        SubjectRecord rec;
        rec.subject_id = s.subject_id;
        rec.domain_length = dl;
        for (int j = 0; j < 2; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            Series ser;
            ser.time.assign(s.grid.data(), s.grid.data() + s.grid.size());
            ser.value.assign(s.noisy[ju].data(), s.noisy[ju].data() + s.noisy[ju].size());
            rec.series.push_back(std::move(ser));
        }
        data.subjects.push_back(std::move(rec));
        truth.subjects.push_back(std::move(s));
    }
    return {std::move(data), std::move(truth)};
}

}  // namespace vdmfpca
