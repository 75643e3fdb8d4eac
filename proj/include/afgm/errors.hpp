#pragma once

#include <stdexcept>
#include <string>

namespace afgm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape mismatch or invalid axis.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Input outside a function's domain (e.g. sqrt of a negative).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or usage.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// NaN or Inf produced somewhere in a computation.
class NumericFault : public Error {
public:
    using Error::Error;
};

/// A caller broke an API contract (e.g. backward from a non-scalar).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (CSV content, checkpoint payload).
class IngestionError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure while reading or writing.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace afgm
