#include "vdmfpca/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "vdmfpca/benchmark.hpp"
#include "vdmfpca/errors.hpp"

namespace vdmfpca {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

double parse_real(const std::string& field, const char* what, std::size_t line) {
    std::string s = field;
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw DataError(std::string("cannot parse ") + what + " '" + field + "'", line);
    }
    if (!std::isfinite(v)) {
        throw DataError(std::string("non-finite ") + what, line);
    }
    return v;
}

struct Obs {
    double time;
    double value;
    std::size_t line;
};

}  // namespace

ReadResult read_long_csv(std::istream& in, const ReadOptions& options) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw DataError("empty input", 1);
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) {
        line.erase(0, 3);
    }
    if (line != "subject_id,variable,time,value") {
        throw DataError("expected header 'subject_id,variable,time,value'", 1);
    }

    std::vector<std::string> variables;
    std::map<std::string, std::size_t> var_index;
    std::vector<std::string> subject_order;
    std::map<std::string, std::map<std::size_t, std::vector<Obs>>> raw;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        const auto f = split_fields(line);
        if (f.size() != 4) {
            throw DataError("expected 4 fields, found " + std::to_string(f.size()), line_no);
        }
        if (f[0].empty() || f[1].empty()) {
            throw DataError("empty subject_id or variable", line_no);
        }
        const double t = parse_real(f[2], "time", line_no);
        const double v = parse_real(f[3], "value", line_no);
        if (t < 0.0) {
            throw DataError("negative time", line_no);
        }
        auto [vit, new_var] = var_index.emplace(f[1], variables.size());
        if (new_var) {
            variables.push_back(f[1]);
        }
        auto sit = raw.find(f[0]);
        if (sit == raw.end()) {
            subject_order.push_back(f[0]);
            sit = raw.emplace(f[0], std::map<std::size_t, std::vector<Obs>>{}).first;
        }
        sit->second[vit->second].push_back({t, v, line_no});
    }
    if (subject_order.empty()) {
        throw DataError("no data rows", line_no);
    }

    ReadResult out;
    out.data.variables = variables;
    const auto threshold = static_cast<std::size_t>(std::max(2, options.min_obs));
    for (const std::string& id : subject_order) {
        auto& per_var = raw.at(id);
        SubjectRecord rec;
        rec.subject_id = id;
        bool keep = true;
        for (std::size_t j = 0; j < variables.size(); ++j) {
            auto it = per_var.find(j);
            if (it == per_var.end() || it->second.size() < threshold) {
                keep = false;
                continue;
            }
            auto& obs = it->second;
            std::stable_sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.time < b.time; });
            Series s;
            for (std::size_t k = 0; k < obs.size(); ++k) {
                if (k > 0 && obs[k].time == obs[k - 1].time) {
                    throw DataError("duplicate time for subject '" + id + "', variable '" + variables[j] + "'",
                                    obs[k].line);
                }
                s.time.push_back(obs[k].time);
                s.value.push_back(obs[k].value);
            }
            rec.domain_length = std::max(rec.domain_length, s.time.back());
            rec.series.push_back(std::move(s));
        }
        if (!keep) {
            ++out.excluded_subjects;
            continue;
        }
        if (!(rec.domain_length > 0.0)) {
            throw DataError("subject '" + id + "' has zero domain length", per_var.begin()->second.front().line);
        }
        out.data.subjects.push_back(std::move(rec));
    }
    return out;
}

ReadResult read_long_csv_file(const std::string& path, const ReadOptions& options) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'", 0);
    }
    return read_long_csv(in, options);
}

void write_long_csv(std::ostream& out, const FunctionalDataset& data) {
    out << "subject_id,variable,time,value\n";
    for (const SubjectRecord& s : data.subjects) {
        for (std::size_t j = 0; j < data.variables.size(); ++j) {
            const Series& ser = s.series[j];
            for (std::size_t k = 0; k < ser.time.size(); ++k) {
                out << s.subject_id << ',' << data.variables[j] << ',' << format_number(ser.time[k]) << ','
                    << format_number(ser.value[k]) << '\n';
            }
        }
    }
}

nlohmann::json truth_to_json(const SimTruth& truth, const SimConfig& config) {
    using nlohmann::json;
    json j;
    j["config"] = {{"n_subjects", config.n_subjects},
                   {"domain_dist", to_string(config.distribution)},
                   {"sigma", config.sigma},
                   {"n_components", config.n_components},
                   {"seed", config.seed}};
    j["eigenvalues"] = std::vector<double>(truth.eigenvalues.data(), truth.eigenvalues.data() + truth.eigenvalues.size());
    const auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    json subjects = json::array();
    for (const SubjectTruth& s : truth.subjects) {
        json js;
        js["subject_id"] = s.subject_id;
        js["domain_length"] = s.domain_length;
        js["grid"] = vec(s.grid);
        for (std::size_t v = 0; v < 2; ++v) {
            const std::string name = v == 0 ? "X1" : "X2";
            json jv;
            jv["scores"] = vec(s.scores[v]);
            jv["mean"] = vec(s.mean[v]);
            jv["noiseless"] = vec(s.noiseless[v]);
            json ef = json::array();
            for (Eigen::Index k = 0; k < s.eigenfunctions[v].cols(); ++k) {
                ef.push_back(vec(s.eigenfunctions[v].col(k)));
            }
            jv["eigenfunctions"] = std::move(ef);
            js[name] = std::move(jv);
        }
        subjects.push_back(std::move(js));
    }
    j["subjects"] = std::move(subjects);
    return j;
}

}  // namespace vdmfpca
