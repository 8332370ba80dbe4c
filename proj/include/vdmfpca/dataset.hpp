#pragma once

#include <string>
#include <vector>

namespace vdmfpca {

/// One variable of one subject: observation times and values.
struct Series {
    std::vector<double> time;
    std::vector<double> value;
};

/// A subject observed on [0, domain_length]; `series` is indexed like
/// FunctionalDataset::variables.
struct SubjectRecord {
    std::string subject_id;
    double domain_length = 0.0;
    std::vector<Series> series;
};

struct FunctionalDataset {
    std::vector<std::string> variables;
    std::vector<SubjectRecord> subjects;

    /// Throws LookupError for an unknown name.
    std::size_t variable_index(const std::string& name) const;
    std::size_t subject_index(const std::string& id) const;
    std::vector<double> domain_lengths() const;

    /// Checks every record invariant; throws ArgumentError naming the subject.
    void validate() const;
};

}  // namespace vdmfpca
