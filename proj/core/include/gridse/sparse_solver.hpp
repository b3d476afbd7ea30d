#pragma once

#include <memory>

#include "gridse/linalg.hpp"

namespace gridse {

/// Direct sparse LU with fill-reducing (COLAMD) ordering. Reusable: analyze
/// the pattern once, refactorize per value set. Deterministic for fixed input
/// regardless of thread count; no iterative fallback.
class SparseLuSolver {
public:
    SparseLuSolver();
    ~SparseLuSolver();
    SparseLuSolver(SparseLuSolver&&) noexcept;
    SparseLuSolver& operator=(SparseLuSolver&&) noexcept;

    /// Symbolic analysis; must precede factorize. `a` must be compressed.
    void analyze(const SpMat& a);

    /// Numeric factorization of a matrix with the analyzed pattern.
    /// Throws SingularSystem.
    void factorize(const SpMat& a);

    /// Analyze + factorize in one call.
    void compute(const SpMat& a);

    Vec solve(const Vec& b) const;

    bool analyzed() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot direct solve of A x = b with the residual contract
/// ||A x - b||_inf <= 1e-9 * max(1, ||b||_inf), one iterative-refinement step
/// applied if the first solve misses it. Throws SingularSystem.
Vec solve_sparse_linear(const SpMat& a, const Vec& b);

}  // namespace gridse
