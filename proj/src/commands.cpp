#include "vdmfpca/commands.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "vdmfpca/errors.hpp"
#include "vdmfpca/io.hpp"

namespace vdmfpca {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw ConfigError("cannot create output directory '" + dir.string() + "'");
    }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("invalid JSON in '" + path + "': " + e.what());
    }
}

}  // namespace

FitSettings fit_settings_from_json(const json& input) {
    const json& j = input.contains("config") && input.at("config").is_object() ? input.at("config") : input;
    if (!j.is_object()) {
        throw ConfigError("fit config must be a JSON object");
    }
    static const std::set<std::string> known = {
        "degree",        "mean_basis_t",     "mean_basis_T", "cov_basis_t",    "cov_basis_T",  "score_basis_T",
        "penalty_order", "lambda_grid",      "include_diagonal", "pve_univariate", "k_max",     "k_fixed",
        "pve_multivariate", "m_fixed",       "grid_step",    "min_obs",        "center_scores"};
    for (const auto& item : j.items()) {
        if (!known.contains(item.key())) {
            throw ConfigError("unknown config key '" + item.key() + "'");
        }
    }
    FitSettings s;
    SmootherConfig& sm = s.mfpca.univariate.smoother;
    const auto set_int = [&](const char* key, int& target) {
        if (j.contains(key)) {
            target = get_as<int>(j, key);
        }
    };
    set_int("degree", sm.degree);
    set_int("mean_basis_t", sm.mean_basis_t);
    set_int("mean_basis_T", sm.mean_basis_T);
    set_int("cov_basis_t", sm.cov_basis_t);
    set_int("cov_basis_T", sm.cov_basis_T);
    set_int("score_basis_T", sm.score_basis_T);
    set_int("penalty_order", sm.penalty.order);
    set_int("k_max", s.mfpca.univariate.components.cap);
    set_int("min_obs", s.min_obs);
    if (j.contains("lambda_grid")) {
        sm.penalty.lambda_grid = get_as<std::vector<double>>(j, "lambda_grid");
    }
    if (j.contains("include_diagonal")) {
        sm.include_diagonal = get_as<bool>(j, "include_diagonal");
    }
    if (j.contains("center_scores")) {
        s.mfpca.center_scores = get_as<bool>(j, "center_scores");
    }
    if (j.contains("pve_univariate")) {
        s.mfpca.univariate.components.pve = get_as<double>(j, "pve_univariate");
    }
    if (j.contains("pve_multivariate")) {
        s.mfpca.multivariate.pve = get_as<double>(j, "pve_multivariate");
    }
    if (j.contains("grid_step")) {
        s.mfpca.univariate.grid_step = get_as<double>(j, "grid_step");
    }
    if (j.contains("k_fixed") && !j.at("k_fixed").is_null()) {
        s.mfpca.univariate.components.fixed = get_as<int>(j, "k_fixed");
    }
    if (j.contains("m_fixed") && !j.at("m_fixed").is_null()) {
        s.mfpca.multivariate.fixed = get_as<int>(j, "m_fixed");
    }

    sm.penalty.validate();
    const auto check_pve = [](double v, const char* name) {
        if (!(v > 0.0 && v <= 1.0)) {
            throw ConfigError(std::string(name) + " must lie in (0, 1]");
        }
    };
    check_pve(s.mfpca.univariate.components.pve, "pve_univariate");
    check_pve(s.mfpca.multivariate.pve, "pve_multivariate");
    if (s.mfpca.univariate.components.cap < 1) {
        throw ConfigError("k_max must be at least 1");
    }
    if ((s.mfpca.univariate.components.fixed && *s.mfpca.univariate.components.fixed < 1) ||
        (s.mfpca.multivariate.fixed && *s.mfpca.multivariate.fixed < 1)) {
        throw ConfigError("fixed component counts must be at least 1");
    }
    if (!(s.mfpca.univariate.grid_step > 0.0)) {
        throw ConfigError("grid_step must be positive");
    }
    if (s.min_obs < 0) {
        throw ConfigError("min_obs must be non-negative");
    }
    return s;
}

json fit_settings_to_json(const FitSettings& s) {
    const SmootherConfig& sm = s.mfpca.univariate.smoother;
    json j;
    j["degree"] = sm.degree;
    j["mean_basis_t"] = sm.mean_basis_t;
    j["mean_basis_T"] = sm.mean_basis_T;
    j["cov_basis_t"] = sm.cov_basis_t;
    j["cov_basis_T"] = sm.cov_basis_T;
    j["score_basis_T"] = sm.score_basis_T;
    j["penalty_order"] = sm.penalty.order;
    j["lambda_grid"] = sm.penalty.lambda_grid;
    j["include_diagonal"] = sm.include_diagonal;
    j["pve_univariate"] = s.mfpca.univariate.components.pve;
    j["k_max"] = s.mfpca.univariate.components.cap;
    j["k_fixed"] = s.mfpca.univariate.components.fixed ? json(*s.mfpca.univariate.components.fixed) : json(nullptr);
    j["pve_multivariate"] = s.mfpca.multivariate.pve;
    j["m_fixed"] = s.mfpca.multivariate.fixed ? json(*s.mfpca.multivariate.fixed) : json(nullptr);
    j["grid_step"] = s.mfpca.univariate.grid_step;
    j["min_obs"] = s.min_obs;
    j["center_scores"] = s.mfpca.center_scores;
    return j;
}

void cmd_simulate(const SimulateOptions& options) {
    const fs::path dir(options.out_dir);
    options.sim.validate();
    ensure_dir(dir);
    const auto [data, truth] = generate(options.sim);
    auto csv = open_out(dir / "data.csv");
    write_long_csv(csv, data);
    auto tj = open_out(dir / "truth.json");
    tj << truth_to_json(truth, options.sim).dump() << '\n';
    if (!csv || !tj) {
        throw ConfigError("failed writing to '" + dir.string() + "'");
    }
}

FitReport cmd_fit(const FitOptions& options) {
    const FitSettings settings =
        options.config_json.empty() ? FitSettings{} : fit_settings_from_json(read_json_file(options.config_json));
    const fs::path dir(options.out_dir);
    ensure_dir(dir);
    ReadResult input = read_long_csv_file(options.data_csv, ReadOptions{settings.min_obs});
    const FunctionalDataset& data = input.data;
    try {
        data.validate();
    } catch (const ArgumentError& e) {
        throw DataError(e.what(), 0);
    }
    const MultivariateVdFit fit = fit_vd_mfpca(data, settings.mfpca);
    const int m = fit.num_components();

    std::set<double> distinct(fit.stacked().domain_lengths.begin(), fit.stacked().domain_lengths.end());
    {
        auto out = open_out(dir / "eigenfunctions.csv");
        out << "variable,T,t,component,value\n";
        for (double dl : distinct) {
            const MultivariateEigenfunctions ef = fit.eigenfunctions_at(dl);
            for (std::size_t j = 0; j < data.variables.size(); ++j) {
                for (int c = 0; c < m; ++c) {
                    for (Eigen::Index g = 0; g < ef.grids[j].size(); ++g) {
                        out << data.variables[j] << ',' << format_number(dl) << ',' << format_number(ef.grids[j](g))
                            << ',' << c + 1 << ',' << format_number(ef.functions[j](g, c)) << '\n';
                    }
                }
            }
        }
    }
    {
        auto out = open_out(dir / "scores.csv");
        out << "subject_id,component,value\n";
        for (Eigen::Index i = 0; i < fit.scores().rows(); ++i) {
            for (int c = 0; c < m; ++c) {
                out << fit.stacked().subject_ids[static_cast<std::size_t>(i)] << ',' << c + 1 << ','
                    << format_number(fit.scores()(i, c)) << '\n';
            }
        }
    }
    {
        auto out = open_out(dir / "variance.csv");
        out << "T,component,eigenvalue,share\n";
        const std::vector<double> grid(distinct.begin(), distinct.end());
        for (const VarianceShare& v : variance_explained_curve(fit.score_covariance(), grid, m)) {
            out << format_number(v.domain_length) << ',' << v.component << ',' << format_number(v.eigenvalue) << ','
                << format_number(v.share) << '\n';
        }
    }
    {
        auto out = open_out(dir / "spearman.csv");
        out << "component,rho,p_value,n\n";
        std::vector<Association> assoc;
        try {
            assoc = score_domain_association(fit.scores(), fit.stacked().domain_lengths);
        } catch (const ArgumentError&) {
            assoc.assign(static_cast<std::size_t>(m), Association{std::nan(""), std::nan("")});
        }
        for (std::size_t c = 0; c < assoc.size(); ++c) {
            out << c + 1 << ',' << format_number(assoc[c].rho) << ',' << format_number(assoc[c].p_value) << ','
                << fit.scores().rows() << '\n';
        }
    }

    FitReport report;
    report.n_subjects = static_cast<int>(data.subjects.size());
    report.excluded_subjects = input.excluded_subjects;
    report.multivariate_components = m;
    json k = json::object();
    for (const auto& u : fit.univariate()) {
        report.univariate_components.push_back(u.num_components());
        k[u.variable()] = u.num_components();
    }
    json manifest;
    manifest["version"] = kVersion;
    manifest["command"] = "fit";
    manifest["data"] = options.data_csv;
    manifest["n_subjects"] = report.n_subjects;
    manifest["excluded_subjects"] = report.excluded_subjects;
    manifest["variables"] = data.variables;
    manifest["K"] = k;
    manifest["M"] = m;
    manifest["score_covariance"] = fit.score_covariance().is_constant() ? "constant" : "smoothed over T";
    manifest["seeds"] = json::object();
    manifest["config"] = fit_settings_to_json(settings);
    manifest["files"] = {"eigenfunctions.csv", "scores.csv", "variance.csv", "spearman.csv"};
    auto out = open_out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
    return report;
}

BenchmarkSpec parse_benchmark_spec(const json& j) {
    BenchmarkSpec spec;
    const json* list = &j;
    if (j.is_object()) {
        if (!j.contains("scenarios")) {
            throw ConfigError("scenario file needs a 'scenarios' array");
        }
        list = &j.at("scenarios");
        if (j.contains("config")) {
            const FitSettings fs = fit_settings_from_json(j.at("config"));
            spec.evaluation.vd = fs.mfpca;
            spec.evaluation.bin.grid_step = fs.mfpca.univariate.grid_step;
            spec.evaluation.bin.univariate.pve = fs.mfpca.univariate.components.pve;
            spec.evaluation.bin.univariate.cap = fs.mfpca.univariate.components.cap;
            spec.evaluation.bin.multivariate.pve = fs.mfpca.multivariate.pve;
        }
    }
    if (!list->is_array() || list->empty()) {
        throw ConfigError("'scenarios' must be a non-empty array");
    }
    for (const json& item : *list) {
        if (!item.is_object()) {
            throw ConfigError("each scenario must be an object");
        }
        Scenario s;
        for (const auto& field : item.items()) {
            const std::string& key = field.key();
            if (key == "n" || key == "N") {
                s.n_subjects = get_as<int>(item, key);
            } else if (key == "dist" || key == "domain_dist") {
                s.distribution = parse_distribution(get_as<std::string>(item, key));
            } else if (key == "sigma") {
                s.sigma = get_as<double>(item, key);
            } else if (key == "bins") {
                s.bins = get_as<std::vector<int>>(item, key);
            } else {
                throw ConfigError("unknown scenario key '" + key + "'");
            }
        }
        if (s.n_subjects < 2 || !(s.sigma >= 0.0)) {
            throw ConfigError("scenario needs n >= 2 and sigma >= 0");
        }
        for (int b : s.bins) {
            if (b < 2) {
                throw ConfigError("bin counts must be at least 2");
            }
        }
        spec.scenarios.push_back(std::move(s));
    }
    return spec;
}

BenchmarkResult cmd_benchmark(const BenchmarkOptions& options) {
    if (options.replicates < 1 || options.jobs < 1) {
        throw ConfigError("replicates and jobs must be at least 1");
    }
    const BenchmarkSpec spec = parse_benchmark_spec(read_json_file(options.scenarios_json));
    const fs::path out_path(options.out_csv);
    if (out_path.has_parent_path()) {
        ensure_dir(out_path.parent_path());
    }
    BenchmarkConfig config;
    config.scenarios = spec.scenarios;
    config.evaluation = spec.evaluation;
    config.replicates = options.replicates;
    config.jobs = options.jobs;
    config.seed = options.seed;
    BenchmarkResult result = run_benchmark(config);

    {
        auto out = open_out(out_path);
        write_results_csv(out, result.rows);
    }
    const std::vector<SummaryRow> summary = summarize_rows(result.rows);
    fs::path stem = out_path;
    stem.replace_extension();
    {
        auto out = open_out(stem.string() + "_summary.csv");
        write_summary_csv(out, summary);
    }
    {
        auto out = open_out(stem.string() + "_summary.md");
        write_summary_markdown(out, summary);
    }
    return result;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const DataError*>(&e) != nullptr) {
        return kExitData;
    }
    if (dynamic_cast<const std::invalid_argument*>(&e) != nullptr) {
        return kExitConfig;
    }
    return 1;
}

}  // namespace vdmfpca
