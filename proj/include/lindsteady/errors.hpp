// errors.hpp — Exception taxonomy shared across the library

#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace lindsteady {

namespace detail {
// std::to_string renders 2e-10 as "0.000000"; tolerance reports need %g
inline std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}
} // namespace detail

// Invalid physical or numerical parameter (N < 2, non-finite rate, ...)
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Structurally inconsistent inputs (dimension or channel-count mismatch)
struct StructuralError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Memory or size budget exceeded before any allocation is attempted
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Long-time integration did not reach the residual criterion; carries the
// last residual so the caller can decide to retry with the null-space solver.
struct SlowGapError : std::runtime_error {
    double last_residual;
    SlowGapError(const std::string& what, double residual)
        : std::runtime_error(what), last_residual(residual) {}
};

// The trace-constrained linear system is singular: the steady-state manifold
// is (numerically) degenerate. Callers should inspect check_uniqueness().
struct DegeneracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Eigensolver failed to converge inside a diagnostic routine
struct EigensolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// State fails a physicality check beyond numerical noise
struct InvalidStateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config document is malformed or violates the schema
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem failure, annotated with the offending path
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace lindsteady
