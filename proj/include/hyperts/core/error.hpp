#pragma once

#include <stdexcept>
#include <string>

namespace hyperts {

/// Base class for all library errors. Subclasses map to CLI exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad configuration or invalid argument (exit code 2).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Shape mismatch between tensors.
class DimensionError : public ConfigError {
public:
    explicit DimensionError(const std::string& msg) : ConfigError(msg) {}
};

/// Unusable input data: missing file, unparseable cell (exit code 3).
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

/// Non-finite values or diverging optimization (exit code 4).
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

/// API misuse, e.g. backward() called twice without reset.
class StateError : public Error {
public:
    explicit StateError(const std::string& msg) : Error(msg) {}
};

} // namespace hyperts
