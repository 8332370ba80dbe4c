#include "vdmfpca/dataset.hpp"

#include <cmath>

#include "vdmfpca/errors.hpp"

namespace vdmfpca {

std::size_t FunctionalDataset::variable_index(const std::string& name) const {
    for (std::size_t j = 0; j < variables.size(); ++j) {
        if (variables[j] == name) {
            return j;
        }
    }
    throw LookupError("unknown variable '" + name + "'");
}

std::size_t FunctionalDataset::subject_index(const std::string& id) const {
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        if (subjects[i].subject_id == id) {
            return i;
        }
    }
    throw LookupError("unknown subject '" + id + "'");
}

std::vector<double> FunctionalDataset::domain_lengths() const {
    std::vector<double> out;
    out.reserve(subjects.size());
    for (const auto& s : subjects) {
        out.push_back(s.domain_length);
    }
    return out;
}

void FunctionalDataset::validate() const {
    if (variables.empty()) {
        throw ArgumentError("dataset has no variables");
    }
    for (const auto& s : subjects) {
        const std::string who = "subject '" + s.subject_id + "': ";
        if (!(s.domain_length > 0.0) || !std::isfinite(s.domain_length)) {
            throw ArgumentError(who + "domain length must be positive");
        }
        if (s.series.size() != variables.size()) {
            throw ArgumentError(who + "series count does not match variable count");
        }
        for (std::size_t j = 0; j < s.series.size(); ++j) {
            const auto& ser = s.series[j];
            if (ser.time.size() != ser.value.size()) {
                throw ArgumentError(who + "time/value length mismatch for " + variables[j]);
            }
            if (ser.time.size() < 2) {
                throw ArgumentError(who + "fewer than 2 observations for " + variables[j]);
            }
            for (std::size_t k = 0; k < ser.time.size(); ++k) {
                if (!std::isfinite(ser.value[k]) || !std::isfinite(ser.time[k])) {
                    throw ArgumentError(who + "non-finite observation for " + variables[j]);
                }
                if (ser.time[k] < 0.0 || ser.time[k] > s.domain_length * (1.0 + 1e-12)) {
                    throw ArgumentError(who + "time outside [0, domain length] for " + variables[j]);
                }
                if (k > 0 && !(ser.time[k] > ser.time[k - 1])) {
                    throw ArgumentError(who + "times not strictly increasing for " + variables[j]);
                }
            }
        }
    }
}

}  // namespace vdmfpca
