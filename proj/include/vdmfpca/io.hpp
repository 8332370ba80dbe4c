#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "vdmfpca/dataset.hpp"
#include "vdmfpca/simgen.hpp"

namespace vdmfpca {

struct ReadOptions {
    /// Subjects with fewer observations than this in any variable are
    /// dropped. Values below 2 still drop subjects with fewer than 2.
    int min_obs = 0;
};

struct ReadResult {
    FunctionalDataset data;
    int excluded_subjects = 0;
};

/// Long CSV with header `subject_id,variable,time,value`. Subjects and
/// variables keep their order of first appearance; each subject's domain
/// length is its largest observed time. Throws DataError with a line number.
ReadResult read_long_csv(std::istream& in, const ReadOptions& options = {});
ReadResult read_long_csv_file(const std::string& path, const ReadOptions& options = {});

/// Subjects in dataset order, variables in order, times ascending.
void write_long_csv(std::ostream& out, const FunctionalDataset& data);

nlohmann::json truth_to_json(const SimTruth& truth, const SimConfig& config);

}  // namespace vdmfpca
