#pragma once

#include <stdexcept>
#include <string>

namespace gridse {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed case-file text. `line` is 1-based.
struct ParseError : Error {
    ParseError(int line_, const std::string& reason)
        : Error("parse error at line " + std::to_string(line_) + ": " + reason), line(line_) {}
    int line;
};

/// Structurally valid input that violates a domain invariant
/// (dangling branch endpoint, non-positive baseMVA, duplicate bus id, ...).
struct ValidationError : Error {
    using Error::Error;
};

/// Measurement-set JSON violating the schema; `path` locates the first violation.
struct SchemaError : Error {
    SchemaError(const std::string& path_, const std::string& reason)
        : Error(path_ + ": " + reason), path(path_) {}
    std::string path;
};

/// File system failure (missing file, unwritable output).
struct IoError : Error {
    using Error::Error;
};

/// Branch with r = x = 0 after perturbation; cannot be stamped.
struct DegenerateBranch : Error {
    using Error::Error;
};

/// Direct factorization hit a structurally or numerically singular matrix.
struct SingularSystem : Error {
    explicit SingularSystem(const std::string& what_, long pivot_ = -1)
        : Error(what_), pivot(pivot_) {}
    long pivot;  // column/pivot index reached when known, else -1
};

/// Newton iteration exceeded max_iter while solving a power flow.
struct Diverged : Error {
    Diverged(int iterations_, double residual_)
        : Error("power flow diverged after " + std::to_string(iterations_) +
                " iterations, residual " + std::to_string(residual_)),
          iterations(iterations_), residual(residual_) {}
    int iterations;
    double residual;
};

/// Newton iteration exceeded max_iter while solving the nonlinear estimator.
struct NotConverged : Error {
    NotConverged(int iterations_, double residual_)
        : Error("estimator not converged after " + std::to_string(iterations_) +
                " iterations, KKT residual " + std::to_string(residual_)),
          iterations(iterations_), residual(residual_) {}
    int iterations;
    double residual;
};

/// Voltage magnitude of zero where a positive one is required.
struct ZeroVoltage : Error {
    using Error::Error;
};

/// Devices do not cover the bus set one-to-one.
struct IndexMismatch : Error {
    using Error::Error;
};

/// Vectors of unequal length fed to an error metric.
struct LengthMismatch : Error {
    using Error::Error;
};

/// More than the tolerated fraction of Monte Carlo samples failed to solve.
struct TooManyFailedSamples : Error {
    using Error::Error;
};

}  // namespace gridse
