#pragma once

#include <stdexcept>
#include <string>

namespace bookie {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A distribution or price was constructed with parameters outside its domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Conditioning on a zero-probability tail event, e.g. E[p | p >= a] with P(p >= a) = 0.
class UndefinedTail : public Error {
public:
    using Error::Error;
};

/// Second-order dominance comparison between laws with different means.
class MeanMismatch : public Error {
public:
    using Error::Error;
};

/// The belief estimator was asked to invert a bet that was never placed.
class NoBetObserved : public Error {
public:
    using Error::Error;
};

/// The polished optimum of the profit landscape touches the search box boundary.
class NoInteriorMax : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

/// Regret series whose tail is not strictly positive cannot be fitted on a log scale.
class DegenerateSeries : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace bookie
