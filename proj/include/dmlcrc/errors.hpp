#pragma once

#include <stdexcept>
#include <string>

namespace dmlcrc {

// Base of all library errors. The three category classes below map onto the
// CLI exit codes: ConfigError -> 1, DataError -> 2, NumericError -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

// --- numeric failures -------------------------------------------------------

struct DimensionMismatch : NumericError {
    using NumericError::NumericError;
};

struct NonFinite : NumericError {
    using NumericError::NumericError;
};

struct NotPositiveDefinite : NumericError {
    using NumericError::NumericError;
};

struct SingularGram : NumericError {
    using NumericError::NumericError;
};

struct SingularSystem : NumericError {
    using NumericError::NumericError;
};

struct AllInfinite : NumericError {
    using NumericError::NumericError;
};

struct Diverged : NumericError {
    using NumericError::NumericError;
};

// --- data failures ----------------------------------------------------------

struct ParseError : DataError {
    ParseError(const std::string& msg, int row, int column)
        : DataError(msg + " (row " + std::to_string(row) + ", column " +
                    std::to_string(column) + ")"),
          row(row),
          column(column) {}
    int row;
    int column;
};

struct EmptyFile : DataError {
    using DataError::DataError;
};

struct RaggedRows : DataError {
    RaggedRows(const std::string& msg, int row)
        : DataError(msg + " (row " + std::to_string(row) + ")"), row(row) {}
    int row;
};

struct ZeroColumn : DataError {
    explicit ZeroColumn(int column)
        : DataError("column " + std::to_string(column) + " has zero norm"),
          column(column) {}
    int column;
};

struct ClassTooSmall : DataError {
    ClassTooSmall(int class_index, int size, int k)
        : DataError("class " + std::to_string(class_index) + " has " +
                    std::to_string(size) + " samples, fewer than k=" +
                    std::to_string(k)),
          class_index(class_index) {}
    int class_index;
};

struct EmptyClass : DataError {
    explicit EmptyClass(int class_index)
        : DataError("class " + std::to_string(class_index) + " has no samples"),
          class_index(class_index) {}
    int class_index;
};

struct IoError : DataError {
    using DataError::DataError;
};

// --- configuration failures -------------------------------------------------

struct InvalidScheme : ConfigError {
    using ConfigError::ConfigError;
};

}  // namespace dmlcrc
