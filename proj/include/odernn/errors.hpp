#pragma once

#include <stdexcept>
#include <string>

namespace odernn {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Shape or scalar-contract violations (mismatched matrix dimensions, non-scalar loss).
struct DimensionError : Error {
    using Error::Error;
};

/// Invalid configuration values (non-positive step sizes, bad split sizes, ...).
struct ConfigError : Error {
    using Error::Error;
};

/// Invalid data values (negative time deltas, non-increasing times, ...).
struct DataError : Error {
    using Error::Error;
};

/// Malformed input files; message carries the offending line number.
struct ParseError : Error {
    using Error::Error;
};

/// Non-finite values encountered during optimization or training.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace odernn
