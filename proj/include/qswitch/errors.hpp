#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qswitch {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad shape, non-positive rate, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Value falls outside a calibrated or supported range.
class DomainError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Integrator, eigen-solver or fitter could not deliver a trustworthy result.
class NumericalError : public Error {
public:
    using Error::Error;
};

class IntegratorError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Floquet mode identification failed: a target state has no mode with weight >= 0.5.
class ModeAmbiguityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double best_residual)
        : NumericalError(what), best_residual_(best_residual) {}
    double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::size_t line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    /// 1-based line of the offending input, 0 when not tied to a line.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace qswitch
