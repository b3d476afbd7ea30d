#include "gridse/sparse_solver.hpp"

#include <cctype>
#include <string>

#include <Eigen/SparseLU>

#include "gridse/errors.hpp"

namespace gridse {

namespace {

/// Eigen reports the offending column only inside its message text.
long pivot_from_message(const std::string& msg) {
    long value = -1;
    std::size_t i = 0;
    while (i < msg.size()) {
        if (std::isdigit(static_cast<unsigned char>(msg[i]))) {
            std::size_t end = i;
            while (end < msg.size() && std::isdigit(static_cast<unsigned char>(msg[end]))) ++end;
            value = std::stol(msg.substr(i, end - i));
            i = end;
        } else {
            ++i;
        }
    }
    return value;
}

}  // namespace

struct SparseLuSolver::Impl {
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    bool analyzed = false;
    bool factorized = false;
};

SparseLuSolver::SparseLuSolver() : impl_(std::make_unique<Impl>()) {}
SparseLuSolver::~SparseLuSolver() = default;
SparseLuSolver::SparseLuSolver(SparseLuSolver&&) noexcept = default;
SparseLuSolver& SparseLuSolver::operator=(SparseLuSolver&&) noexcept = default;

void SparseLuSolver::analyze(const SpMat& a) {
    if (a.rows() != a.cols()) throw LengthMismatch("matrix must be square");
    impl_->lu.analyzePattern(a);
    impl_->analyzed = true;
    impl_->factorized = false;
}

void SparseLuSolver::factorize(const SpMat& a) {
    if (!impl_->analyzed) throw Error("factorize called before analyze");
    impl_->lu.factorize(a);
    if (impl_->lu.info() != Eigen::Success) {
        std::string msg = impl_->lu.lastErrorMessage();
        throw SingularSystem("sparse LU factorization failed: " + msg,
                             pivot_from_message(msg));
    }
    impl_->factorized = true;
}

void SparseLuSolver::compute(const SpMat& a) {
    analyze(a);
    factorize(a);
}

Vec SparseLuSolver::solve(const Vec& b) const {
    if (!impl_->factorized) throw Error("solve called before factorize");
    Vec x = impl_->lu.solve(b);
    if (impl_->lu.info() != Eigen::Success)
        throw SingularSystem("sparse LU back-substitution failed");
    return x;
}

bool SparseLuSolver::analyzed() const { return impl_->analyzed; }

Vec solve_sparse_linear(const SpMat& a, const Vec& b) {
    if (a.rows() != a.cols()) throw LengthMismatch("matrix must be square");
    if (a.cols() != b.size()) throw LengthMismatch("right-hand side length mismatch");
    if (b.size() == 0) return Vec();

    SpMat ac = a;
    ac.makeCompressed();
    SparseLuSolver lu;
    lu.compute(ac);
    Vec x = lu.solve(b);

    const double bound = 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff());
    Vec r = b - ac * x;
    if (r.cwiseAbs().maxCoeff() > bound) {
        x += lu.solve(r);
        r = b - ac * x;
        if (r.cwiseAbs().maxCoeff() > bound)
            throw SingularSystem("numerically singular system: residual " +
                                 std::to_string(r.cwiseAbs().maxCoeff()) +
                                 " after refinement");
    }
    return x;
}

}  // namespace gridse
