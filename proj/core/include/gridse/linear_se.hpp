#pragma once

#include <memory>
#include <vector>

#include "gridse/casegen.hpp"
#include "gridse/network.hpp"

namespace gridse {

/// The 4n x 4n saddle-point system of the linear estimator. Unknowns are
/// ordered [vr(0..n-1); vi; lambda_r; lambda_i]; row k is the real KCL
/// equation of bus k, row n+k the imaginary one, rows 2n+k / 3n+k the
/// stationarity (adjoint) equations in vr_k / vi_k.
struct KktSystem {
    int n = 0;
    SpMat matrix;
    Vec rhs;

    int vr_col(int k) const { return k; }
    int vi_col(int k) const { return n + k; }
    int lr_col(int k) const { return 2 * n + k; }
    int li_col(int k) const { return 3 * n + k; }
};

/// Estimator output. delta_ir/delta_ii (and delta_g/delta_b for the nonlinear
/// model) are indexed by `rtu_buses`, the dense bus indices carrying an RTU.
struct EstimateResult {
    Vec vr;
    Vec vi;
    Vec lambda_r;
    Vec lambda_i;
    std::vector<int> rtu_buses;
    std::vector<double> delta_ir;
    std::vector<double> delta_ii;
    std::vector<double> delta_g;   // nonlinear model only
    std::vector<double> delta_b;   // nonlinear model only
    double objective = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// One-shot KKT assembly (current-mismatch RTU model, correction currents
/// eliminated through delta_i = -lambda/gamma). Throws IndexMismatch if the
/// devices do not cover the buses.
KktSystem assemble_kkt(const SeCase& se, const SplitAdmittance& adm);

/// Reusable assembler for repeated same-topology solves: the sparsity pattern
/// and slot mapping are built once, refresh() rewrites only values and rhs.
class KktAssembler {
public:
    KktAssembler(const SeCase& se, const SplitAdmittance& adm);
    ~KktAssembler();
    KktAssembler(KktAssembler&&) noexcept;

    /// Rewrite values for a case/admittance with identical structure.
    void refresh(const SeCase& se, const SplitAdmittance& adm);

    const SpMat& matrix() const;
    const Vec& rhs() const;
    int n() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Solve the linear estimator in one sparse direct solve; converged reports
/// the residual-quality check (one refinement step applied when needed).
EstimateResult solve_linear_se(const SeCase& se);
EstimateResult solve_linear_se(const SeCase& se, const SplitAdmittance& adm);

/// Objective of the current-mismatch model at a solved state (1/2 convention).
double linear_objective(const SeCase& se, const EstimateResult& r);

}  // namespace gridse
