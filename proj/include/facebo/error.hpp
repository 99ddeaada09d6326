#pragma once

#include <stdexcept>
#include <string>

namespace facebo {

/// Base of every error thrown by the library. The subclasses let callers
/// (the HTTP layer and the CLI) map failures onto status and exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Covariance factorization failed even after the jitter retry.
class NumericalDegeneracy : public Error {
public:
    using Error::Error;
};

/// A grid or evaluation request exceeds the configured evaluation budget.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

/// Session operations were called out of order (query/rating alternation).
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Not enough data for the requested analysis.
class InsufficientData : public Error {
public:
    using Error::Error;
};

/// Invalid configuration; `field` names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Event log content that cannot be replayed.
class CorruptLog : public Error {
public:
    using Error::Error;
};

}  // namespace facebo
