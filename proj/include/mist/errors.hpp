// errors.hpp — Exception types shared across the toolkit

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mist {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user-supplied parameter (negative energy, dim < 2, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// An input violates a documented operator contract (e.g. non-Hermitian
// matrix passed where a Hermitian one is required).
class ContractViolation : public Error {
public:
    using Error::Error;
};

// Eigensolver did not converge; message carries the LAPACK info code.
class EigensolverError : public Error {
public:
    using Error::Error;
};

// DASI could not produce an unambiguous label assignment at some step.
class AmbiguousLabelingError : public Error {
public:
    AmbiguousLabelingError(const std::string& msg, double g_step, double delta_g,
                           std::vector<std::pair<int, int>> labels)
        : Error(msg), g(g_step), delta_g(delta_g), offending(std::move(labels)) {}

    double g;        // coupling value of the failing step, rad/ns
    double delta_g;  // step size in use, rad/ns
    std::vector<std::pair<int, int>> offending;  // (k, n) labels involved
};

// Guard-band truncation levels acquired too much population; results
// beyond this point are untrustworthy.
class TruncationOverflow : public Error {
public:
    TruncationOverflow(const std::string& msg, double time_ns, double mass)
        : Error(msg), t(time_ns), guard_mass(mass) {}

    double t;
    double guard_mass;
};

// Perturbative expression hit a (near-)resonant denominator.
class DivergentPerturbation : public Error {
public:
    using Error::Error;
};

// Metric undefined for the given inputs (e.g. all matrix elements vanish).
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

}  // namespace mist
