#pragma once

#include <stdexcept>
#include <string>

namespace vdmfpca {

/// Invalid configuration (basis sizes, component counts, degenerate designs).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or empty input data passed to an operation.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Evaluation requested outside the region a model was fitted on.
class DomainError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Unknown subject or variable name.
class LookupError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// A fit could not be carried out (no usable observations).
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unparseable input file; carries the 1-based line number when known.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what, long line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    long line() const noexcept { return line_; }

private:
    long line_;
};

}  // namespace vdmfpca
