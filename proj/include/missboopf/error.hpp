#pragma once

#include <stdexcept>
#include <string>

namespace missboopf {

/// Base class of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed CSV, schema sidecar or plan file.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Header/schema mismatch, unknown level, type-inconsistent cell.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A column without a single observed cell.
class FullyMissingColumn : public Error {
public:
    explicit FullyMissingColumn(std::size_t column)
        : Error("column " + std::to_string(column) + " has no observed cells"), column_(column) {}

    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

/// Parameter outside its documented domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Matrix is not positive semidefinite beyond rounding tolerance.
class NotPositiveSemidefinite : public Error {
public:
    using Error::Error;
};

}  // namespace missboopf
