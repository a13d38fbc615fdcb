#pragma once

#include <stdexcept>
#include <string>

namespace calderon {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition (grid too small, bad label, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// The ODE integrator could not advance (step underflow, non-finite state).
class IntegratorFailure : public Error {
public:
    IntegratorFailure(const std::string& what, double location)
        : Error(what + " at x=" + std::to_string(location)), location_(location) {}

    double location() const noexcept { return location_; }

private:
    double location_;
};

/// A linear factorization hit a zero (or non-finite) pivot.
class SingularSystem : public Error {
public:
    using Error::Error;
};

/// Root bracket without a sign change, or search window exhausted.
class BracketError : public Error {
public:
    using Error::Error;
};

/// mu is (numerically) a zero of the characteristic function.
class PoleError : public Error {
public:
    PoleError(const std::string& what, double mu) : Error(what), mu_(mu) {}

    double mu() const noexcept { return mu_; }

private:
    double mu_;
};

/// lambda lies (numerically) in a Dirichlet spectrum used by a DN computation.
class AdmissibilityError : public Error {
public:
    AdmissibilityError(const std::string& what, double mu) : Error(what), mu_(mu) {}

    double mu() const noexcept { return mu_; }

private:
    double mu_;
};

/// A nonlinear iteration did not converge or broke one of its certificates.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace calderon
