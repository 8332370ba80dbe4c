#include "vdmfpca/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <thread>
#include <tuple>

#include "vdmfpca/linalg.hpp"
#include "vdmfpca/metrics.hpp"

namespace vdmfpca {

std::string format_number(double value) {
    if (std::isnan(value)) {
        return "NA";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string Scenario::label() const {
    return "N=" + std::to_string(n_subjects) + "|" + to_string(distribution) + "|sigma=" + format_number(sigma);
}

std::uint64_t replicate_seed(std::uint64_t base_seed, const Scenario& scenario, int replicate) {
    return derive_seed(base_seed, {hash_label(scenario.label()), static_cast<std::uint64_t>(replicate)});
}

namespace {

ResultRow make_row(const std::string& method, int n_bins, const std::string& metric, const std::string& variable,
                   int component, double value) {
    ResultRow r;
    r.method = method;
    r.n_bins = n_bins;
    r.metric = metric;
    r.variable = variable;
    r.component = component;
    r.value = value;
    return r;
}

Eigen::VectorXd on_points(const Eigen::VectorXd& grid, const Eigen::VectorXd& values, const Eigen::VectorXd& at) {
    return interpolate_linear(std::span<const double>(grid.data(), static_cast<std::size_t>(grid.size())),
                              std::span<const double>(values.data(), static_cast<std::size_t>(values.size())), at);
}

}  // namespace

std::vector<ResultRow> vd_metric_rows(const MultivariateVdFit& fit, const FunctionalDataset& data,
                                      const SimTruth& truth, int pc_components) {
    const std::size_t p = data.variables.size();
    std::vector<std::vector<Eigen::VectorXd>> true_x(p), est_x(p);
    for (const SubjectTruth& s : truth.subjects) {
        const std::vector<Series> rec = reconstruct(fit, data, s.subject_id, fit.num_components());
        for (std::size_t j = 0; j < p; ++j) {
            true_x[j].push_back(s.noiseless[j]);
            est_x[j].emplace_back(Eigen::Map<const Eigen::VectorXd>(rec[j].value.data(),
                                                                    static_cast<Eigen::Index>(rec[j].value.size())));
        }
    }
    std::vector<ResultRow> rows;
    for (std::size_t j = 0; j < p; ++j) {
        rows.push_back(make_row(kMethodVd, 0, "ARMSE_X", data.variables[j], 0, armse_x(true_x[j], est_x[j])));
    }
    for (std::size_t j = 0; j < p; ++j) {
        const UnivariateVdFpcaFit& uf = fit.univariate()[j];
        const int k_max = std::min(pc_components, uf.num_components());
        std::vector<Eigen::MatrixXd> true_pc, est_pc;
        std::vector<Eigen::VectorXd> times;
        for (const SubjectTruth& s : truth.subjects) {
            const Eigenbasis& basis = uf.eigenbases().at(static_cast<double>(s.domain_length));
            Eigen::MatrixXd est(s.grid.size(), k_max);
            for (int k = 0; k < k_max; ++k) {
                est.col(k) = on_points(basis.grid, basis.functions.col(k), s.grid);
            }
            true_pc.push_back(s.eigenfunctions[j].leftCols(k_max));
            est_pc.push_back(std::move(est));
            times.push_back(s.grid);
        }
        for (int k = 1; k <= k_max; ++k) {
            rows.push_back(make_row(kMethodVd, 0, "ARMSE_PC", data.variables[j], k, armse_pc(true_pc, est_pc, times, k)));
        }
    }
    return rows;
}

std::vector<ResultRow> bin_metric_rows(const BinnedMfpcaFit& fit, const SimTruth& truth, int pc_components) {
    const int n_bins = fit.assignment.n_bins_requested;
    const std::size_t p = 2;
    std::vector<std::vector<Eigen::VectorXd>> true_x(p), est_x(p);
    std::vector<std::vector<Eigen::MatrixXd>> true_pc(p), est_pc(p);
    std::vector<Eigen::VectorXd> times;
    int k_avail = pc_components;
    for (const BinFit& b : fit.bins) {
        for (const auto& f : b.eigenfunctions) {
            k_avail = std::min(k_avail, static_cast<int>(f.cols()));
        }
    }
    for (std::size_t i = 0; i < truth.subjects.size(); ++i) {
        const int bf = fit.subject_fit[i];
        if (bf < 0) {
            continue;
        }
        const SubjectTruth& s = truth.subjects[i];
        const BinFit& b = fit.bins[static_cast<std::size_t>(bf)];
        const auto row = static_cast<Eigen::Index>(fit.subject_row[i]);
        const double limit = binned_metrics_domain(fit.assignment, static_cast<int>(i));
        const auto n_eval = static_cast<Eigen::Index>(
            std::upper_bound(s.grid.data(), s.grid.data() + s.grid.size(), limit * (1.0 + 1e-12)) - s.grid.data());
        const Eigen::VectorXd pts = s.grid.head(n_eval);
        times.push_back(pts);
        for (std::size_t j = 0; j < p; ++j) {
            true_x[j].push_back(s.noiseless[j].head(n_eval));
            est_x[j].push_back(on_points(b.grid, b.reconstruction[j].row(row).transpose(), pts));
            Eigen::MatrixXd est(n_eval, k_avail);
            for (int k = 0; k < k_avail; ++k) {
                est.col(k) = on_points(b.grid, b.eigenfunctions[j].col(k), pts);
            }
            true_pc[j].push_back(s.eigenfunctions[j].topLeftCorner(n_eval, k_avail));
            est_pc[j].push_back(std::move(est));
        }
    }
    const char* names[] = {"X1", "X2"};
    std::vector<ResultRow> rows;
    for (std::size_t j = 0; j < p; ++j) {
        rows.push_back(make_row(kMethodBin, n_bins, "ARMSE_X", names[j], 0, armse_x(true_x[j], est_x[j])));
    }
    for (std::size_t j = 0; j < p; ++j) {
        for (int k = 1; k <= k_avail; ++k) {
            rows.push_back(make_row(kMethodBin, n_bins, "ARMSE_PC", names[j], k, armse_pc(true_pc[j], est_pc[j], times, k)));
        }
    }
    return rows;
}

std::vector<ResultRow> evaluate_replicate(const Scenario& scenario, int replicate, std::uint64_t base_seed,
                                          const EvaluationConfig& config) {
    SimConfig sim;
    sim.n_subjects = scenario.n_subjects;
    sim.distribution = scenario.distribution;
    sim.sigma = scenario.sigma;
    sim.seed = replicate_seed(base_seed, scenario, replicate);
    auto [data, truth] = generate(sim);

    std::vector<ResultRow> rows;
    try {
        const MultivariateVdFit fit = fit_vd_mfpca(data, config.vd);
        auto r = vd_metric_rows(fit, data, truth, config.pc_components);
        rows.insert(rows.end(), r.begin(), r.end());
    } catch (const std::exception& e) {
        ResultRow err = make_row(kMethodVd, 0, "ERROR", "", 0, std::nan(""));
        err.message = e.what();
        rows.push_back(err);
    }
    for (int nb : scenario.bins) {
        try {
            const BinnedMfpcaFit fit = fit_binned(data, nb, config.bin);
            auto r = bin_metric_rows(fit, truth, config.pc_components);
            rows.insert(rows.end(), r.begin(), r.end());
        } catch (const std::exception& e) {
            ResultRow err = make_row(kMethodBin, nb, "ERROR", "", 0, std::nan(""));
            err.message = e.what();
            rows.push_back(err);
        }
    }
    for (ResultRow& r : rows) {
        r.n_subjects = scenario.n_subjects;
        r.domain_dist = to_string(scenario.distribution);
        r.sigma = scenario.sigma;
        r.replicate = replicate;
    }
    return rows;
}

bool BenchmarkResult::exceeds_failure_threshold(double fraction) const {
    return total_replicates > 0 && failed_replicates > fraction * total_replicates;
}

void sort_rows(std::vector<ResultRow>& rows) {
    const auto key = [](const ResultRow& r) {
        return std::tie(r.n_subjects, r.domain_dist, r.sigma, r.replicate, r.method, r.n_bins, r.metric, r.variable,
                        r.component);
    };
    std::stable_sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) { return key(a) < key(b); });
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config) {
    struct Task {
        std::size_t scenario;
        int replicate;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < config.scenarios.size(); ++s) {
        for (int r = 1; r <= config.replicates; ++r) {
            tasks.push_back({s, r});
        }
    }
    std::vector<std::vector<ResultRow>> slots(tasks.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t t = next++; t < tasks.size(); t = next++) {
            slots[t] = evaluate_replicate(config.scenarios[tasks[t].scenario], tasks[t].replicate, config.seed,
                                          config.evaluation);
        }
    };
    const auto n_workers = static_cast<std::size_t>(std::max(1, config.jobs));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < std::min(n_workers, tasks.size()); ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) {
        th.join();
    }

    BenchmarkResult out;
    out.total_replicates = static_cast<int>(tasks.size());
    for (auto& slot : slots) {
        const bool failed = std::any_of(slot.begin(), slot.end(), [](const ResultRow& r) { return r.metric == "ERROR"; });
        out.failed_replicates += failed ? 1 : 0;
        out.rows.insert(out.rows.end(), std::make_move_iterator(slot.begin()), std::make_move_iterator(slot.end()));
    }
    sort_rows(out.rows);
    return out;
}

std::vector<SummaryRow> summarize_rows(const std::vector<ResultRow>& rows) {
    using Key = std::tuple<int, std::string, double, std::string, int, std::string, std::string, int>;
    std::map<Key, std::vector<double>> cells;
    for (const ResultRow& r : rows) {
        if (r.metric == "ERROR") {
            continue;
        }
        cells[Key{r.n_subjects, r.domain_dist, r.sigma, r.method, r.n_bins, r.metric, r.variable, r.component}]
            .push_back(r.value);
    }
    std::vector<SummaryRow> out;
    for (const auto& [key, values] : cells) {
        SummaryRow s;
        std::tie(s.n_subjects, s.domain_dist, s.sigma, s.method, s.n_bins, s.metric, s.variable, s.component) = key;
        if (values.size() >= 2) {
            const CellSummary c = summarize(values);
            s.mean = c.mean;
            s.sd = c.sd;
        } else {
            s.mean = values.front();
            s.sd = std::nan("");
        }
        s.n = values.size();
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string q = "\"";
    for (char c : s) {
        q += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return q + "\"";
}

std::string component_field(int component) { return component > 0 ? std::to_string(component) : ""; }

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << "N,domain_dist,sigma,n_bins,replicate,method,metric,variable,component,value,message\n";
    for (const ResultRow& r : rows) {
        out << r.n_subjects << ',' << r.domain_dist << ',' << format_number(r.sigma) << ',' << r.n_bins << ','
            << r.replicate << ',' << r.method << ',' << r.metric << ',' << r.variable << ','
            << component_field(r.component) << ',' << format_number(r.value) << ',' << csv_field(r.message) << '\n';
    }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "N,domain_dist,sigma,n_bins,method,metric,variable,component,mean,sd,n\n";
    for (const SummaryRow& r : rows) {
        out << r.n_subjects << ',' << r.domain_dist << ',' << format_number(r.sigma) << ',' << r.n_bins << ','
            << r.method << ',' << r.metric << ',' << r.variable << ',' << component_field(r.component) << ','
            << format_number(r.mean) << ',' << format_number(r.sd) << ',' << r.n << '\n';
    }
}

void write_summary_markdown(std::ostream& out, const std::vector<SummaryRow>& rows) {
    using TableKey = std::tuple<std::string, std::string, int>;
    using ScenarioKey = std::tuple<int, std::string, double>;
    std::map<TableKey, std::map<ScenarioKey, std::map<std::string, std::string>>> tables;
    std::set<std::pair<int, std::string>> columns;
    for (const SummaryRow& r : rows) {
        const std::string column = r.method == kMethodBin ? "BIN" + std::to_string(r.n_bins) : r.method;
        columns.insert({r.method == kMethodBin ? r.n_bins : 0, column});
        char cell[96];
        std::snprintf(cell, sizeof(cell), "%.4f (%.4f)", r.mean, r.sd);
        tables[{r.metric, r.variable, r.component}][{r.n_subjects, r.domain_dist, r.sigma}][column] = cell;
    }
    for (const auto& [tkey, scenarios] : tables) {
        const auto& [metric, variable, component] = tkey;
        out << "### " << metric << ' ' << variable;
        if (component > 0) {
            out << " PC" << component;
        }
        out << "\n\n| N | domain | sigma |";
        for (const auto& c : columns) {
            out << ' ' << c.second << " |";
        }
        out << "\n|---|---|---|";
        for (std::size_t i = 0; i < columns.size(); ++i) {
            out << "---|";
        }
        out << '\n';
        for (const auto& [skey, cells] : scenarios) {
            out << "| " << std::get<0>(skey) << " | " << std::get<1>(skey) << " | " << format_number(std::get<2>(skey))
                << " |";
            for (const auto& c : columns) {
                const auto it = cells.find(c.second);
                out << ' ' << (it == cells.end() ? "-" : it->second) << " |";
            }
            out << '\n';
        }
        out << '\n';
    }
}

}  // namespace vdmfpca
