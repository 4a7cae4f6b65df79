#pragma once

#include <stdexcept>
#include <string>

namespace kscn {

/// Broad failure class; the CLI maps each one to a process exit code.
enum class ErrorKind { Config, Data, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

struct NotPositiveDefinite : NumericError {
    NotPositiveDefinite(std::size_t pivot, double value)
        : NumericError("matrix not positive definite: pivot " + std::to_string(pivot) + " = " +
                       std::to_string(value)),
          pivot_index(pivot) {}
    std::size_t pivot_index;
};

struct NoConvergence : NumericError {
    explicit NoConvergence(const std::string& what) : NumericError(what) {}
};

struct DegenerateCandidate : NumericError {
    DegenerateCandidate() : NumericError("candidate node output has zero norm") {}
};

struct ParseError : DataError {
    ParseError(const std::string& what, std::size_t row, std::size_t col)
        : DataError("parse error at row " + std::to_string(row) + ", column " + std::to_string(col) +
                    ": " + what),
          row(row), col(col) {}
    std::size_t row;
    std::size_t col;
};

struct NonNumericCell : ParseError {
    NonNumericCell(const std::string& cell, std::size_t row, std::size_t col)
        : ParseError("non-numeric cell '" + cell + "'", row, col) {}
};

struct TooFewRows : DataError {
    TooFewRows(std::size_t have, std::size_t need)
        : DataError("too few rows: have " + std::to_string(have) + ", need at least " +
                    std::to_string(need)) {}
};

struct BadCounts : DataError {
    explicit BadCounts(const std::string& what) : DataError(what) {}
};

struct DimensionMismatch : DataError {
    explicit DimensionMismatch(const std::string& what) : DataError(what) {}
};

struct SchemaError : DataError {
    SchemaError(const std::string& field_path, const std::string& what)
        : DataError("schema error at '" + field_path + "': " + what), field_path(field_path) {}
    std::string field_path;
};

struct IoError : DataError {
    explicit IoError(const std::string& what) : DataError(what) {}
};

}  // namespace kscn
