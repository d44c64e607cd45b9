#pragma once

#include <stdexcept>
#include <string>

namespace monsoon {

// Error classes map onto CLI exit codes: config/usage -> 2, data -> 3, numeric -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

struct ShapeError : DataError {
    using DataError::DataError;
};

struct NumericError : Error {
    using Error::Error;
};

struct UsageError : ConfigError {
    using ConfigError::ConfigError;
};

} // namespace monsoon
