#pragma once

#include <vector>

#include "gridse/linalg.hpp"
#include "gridse/types.hpp"

namespace gridse {

enum class PfInit { flat, from_case };

struct PfOptions {
    double tol = 1e-8;   // max-abs current residual, p.u.
    int max_iter = 50;
    PfInit init = PfInit::flat;
};

/// Converged power-flow state in rectangular coordinates. p_net/q_net are the
/// solved net complex-power injections per bus (generation minus load), with
/// slack P/Q and pv-bus Q filled from the solution; they make the KCL residual
/// recomputable from scratch.
struct PfSolution {
    Vec vr;
    Vec vi;
    std::vector<double> p_net;
    std::vector<double> q_net;
    int iterations = 0;
    double max_mismatch = 0.0;
};

/// Newton-Raphson on rectangular current-injection equations. PV buses carry a
/// free reactive-injection variable plus the magnitude constraint
/// vr^2 + vi^2 = vset^2; the slack bus is held at vset (angle va_init).
/// Throws Diverged or SingularSystem.
PfSolution solve_power_flow(const GridCase& c, const PfOptions& opt = {});

/// Max-abs KCL current residual of a candidate state over non-slack buses,
/// built from a fresh admittance; the certificate behind PfSolution::max_mismatch.
double pf_residual(const GridCase& c, const Vec& vr, const Vec& vi,
                   const std::vector<double>& p_net, const std::vector<double>& q_net);

}  // namespace gridse
