#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bdiff {

// Input-side failures: a caller handed us something outside an operation's
// contract. The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ContractViolation : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class UnsupportedError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Numerical failures on valid input. The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularityError : public NumericalError {
public:
    SingularityError(const std::string& what, double t)
        : NumericalError(what), t_(t) {}
    double time() const noexcept { return t_; }

private:
    double t_;
};

class InstabilityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, std::vector<double> history = {})
        : NumericalError(what), history_(std::move(history)) {}
    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

}  // namespace bdiff
