#pragma once

#include <stdexcept>
#include <string>

namespace mtebounds {

// Invalid inputs or configuration (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical routine failed to reach its tolerance (maps to exit code 3).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Logit likelihood unbounded along some coefficient direction.
class SeparationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Design matrix does not have full column rank.
class RankDeficientError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Too few observations to carry out a local fit.
class InsufficientDataError : public NumericalError {
public:
    InsufficientDataError(const std::string& what, double effectiveN)
        : NumericalError(what), effectiveN_(effectiveN) {}
    double effectiveN() const { return effectiveN_; }

private:
    double effectiveN_;
};

}  // namespace mtebounds
