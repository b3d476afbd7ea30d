#pragma once

#include "gridse/linear_se.hpp"

namespace gridse {

/// Iterate of the admittance-mismatch estimator: primal voltages, adjoint
/// multipliers, and per-RTU admittance corrections (indexed by rtu bus order).
struct NlState {
    Vec vr;
    Vec vi;
    Vec lambda_r;
    Vec lambda_i;
    Vec delta_g;
    Vec delta_b;
};

enum class NlInit { from_linear, flat };

struct NlOptions {
    double tol = 1e-8;       // max-abs nonlinear KKT residual
    int max_iter = 50;
    double damping = 1.0;    // halved on residual increase, floored at 0.125
    NlInit init = NlInit::from_linear;
};

/// Exact (unlinearized) KKT residual vector of the admittance-mismatch model,
/// ordered [primal r; primal i; adjoint vr; adjoint vi; dG; dB].
Vec nl_kkt_residual_vector(const SeCase& se, const SplitAdmittance& adm, const NlState& s);

/// Analytic Jacobian of nl_kkt_residual_vector at s (bilinear, hence exact).
SpMat nl_kkt_jacobian(const SeCase& se, const SplitAdmittance& adm, const NlState& s);

/// Max-abs entry of the exact KKT residual; used by the solver and by tests.
double kkt_residual(const SeCase& se, const NlState& s);
double kkt_residual(const SeCase& se, const SplitAdmittance& adm, const NlState& s);

/// Newton-Raphson on the coupled primal/adjoint equations with residual-based
/// damping. Throws NotConverged or SingularSystem.
EstimateResult solve_nonlinear_se(const SeCase& se, const NlOptions& opt = {});
EstimateResult solve_nonlinear_se(const SeCase& se, const SplitAdmittance& adm,
                                  const NlOptions& opt = {});

/// Objective of the admittance-mismatch model (1/2 convention).
double nonlinear_objective(const SeCase& se, const EstimateResult& r);

/// Feasible completion of a fixed voltage profile: the unique (delta_g,
/// delta_b) making every RTU KCL row exact, and the objective there.
/// The solver's result must never be worse than this value at the linear
/// estimator's voltages.
double nonlinear_objective_at_voltages(const SeCase& se, const SplitAdmittance& adm,
                                       const Vec& vr, const Vec& vi);

}  // namespace gridse
