#pragma once

#include <stdexcept>
#include <string>

namespace ratedist {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input (bad distribution, non-PSD matrix, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Argument outside the operation's domain (D <= 0, mismatched alphabets, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// A constraint that cannot be met (distortion budget above total variance, ...).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

// Numerical degeneracy (normalizer underflowed to zero, empty support, ...).
class DegeneracyError : public Error {
public:
    using Error::Error;
};

// Iteration failed to converge; carries the last residual and iteration count.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double residual, int iterations)
        : Error(msg), residual_(residual), iterations_(iterations) {}

    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

}  // namespace ratedist
