#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ksadi {

/// Invalid grid, scheme or experiment configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An input violated a mathematical precondition (e.g. nonpositive M).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A sampled function returned a non-finite value.
class SamplingError : public std::runtime_error {
public:
    SamplingError(int i, int j, double x, double y);

    int i() const noexcept { return i_; }
    int j() const noexcept { return j_; }

private:
    int i_;
    int j_;
};

/// Zero pivot or singular correction in a direct tridiagonal solve.
class SingularSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Conjugate gradient did not reach the requested tolerance.
class IterationLimitError : public std::runtime_error {
public:
    IterationLimitError(int iterations, double relative_residual);

    int iterations() const noexcept { return iterations_; }
    double relative_residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

/// A stepper was called in a state it cannot handle (e.g. missing history).
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A time integration produced non-finite values.
class NumericalAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ksadi
