#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rcg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A root-finding bracket whose endpoints do not straddle a root.
class BracketError : public Error {
public:
    using Error::Error;
};

/// An iterative method ran out of iterations.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A volatility matrix whose rows are (numerically) dependent.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// A strategy left the constraint set during a simulation.
class AdmissibilityError : public Error {
public:
    AdmissibilityError(const std::string& what, std::size_t step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Invalid experiment configuration; `field()` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace rcg
