#include "gridse/nonlinear_se.hpp"

#include <cmath>

#include "device_view.hpp"
#include "gridse/sparse_solver.hpp"

namespace gridse {

namespace {

using detail::DeviceView;
using detail::make_device_view;

/// KCL Jacobian d(primal)/d(voltages) at the corrected admittances: network
/// plus per-bus device stamps with (g_m + dG, b_m + dB) at RTU buses.
SpMat corrected_j(const DeviceView& dv, const SplitAdmittance& adm, const Vec& dg,
                  const Vec& db) {
    const int n = dv.n;
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(adm.blocks.nonZeros()) + 4 * static_cast<std::size_t>(n));
    for (int col = 0; col < adm.blocks.outerSize(); ++col)
        for (SpMat::InnerIterator it(adm.blocks, col); it; ++it)
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                               it.value());
    for (int k = 0; k < n; ++k) {
        auto at = static_cast<std::size_t>(k);
        if (dv.pmu[at]) {
            trips.emplace_back(k, k, dv.g_pmu[at]);
            trips.emplace_back(n + k, n + k, dv.g_pmu[at]);
        } else {
            int s = dv.rtu_slot[at];
            double g = dv.g_m[at] + dg[s];
            double b = dv.b_m[at] + db[s];
            trips.emplace_back(k, k, g);
            trips.emplace_back(k, n + k, b);
            trips.emplace_back(n + k, k, -b);
            trips.emplace_back(n + k, n + k, g);
        }
    }
    SpMat j(2 * n, 2 * n);
    j.setFromTriplets(trips.begin(), trips.end());
    return j;
}

void check_state(const DeviceView& dv, const NlState& s) {
    const int n = dv.n;
    const int m = dv.rtu_count();
    if (s.vr.size() != n || s.vi.size() != n || s.lambda_r.size() != n ||
        s.lambda_i.size() != n)
        throw LengthMismatch("state voltage/multiplier vectors must have one entry per bus");
    if (s.delta_g.size() != m || s.delta_b.size() != m)
        throw LengthMismatch("admittance corrections must have one entry per RTU");
}

Vec residual_vector(const DeviceView& dv, const SplitAdmittance& adm, const NlState& s) {
    check_state(dv, s);
    const int n = dv.n;
    const int m = dv.rtu_count();

    Vec x(2 * n), lambda(2 * n);
    x.head(n) = s.vr;
    x.tail(n) = s.vi;
    lambda.head(n) = s.lambda_r;
    lambda.tail(n) = s.lambda_i;

    SpMat j = corrected_j(dv, adm, s.delta_g, s.delta_b);
    Vec f(4 * n + 2 * m);
    f.head(2 * n) = j * x;
    f.segment(2 * n, 2 * n) = j.transpose() * lambda;

    for (int k = 0; k < n; ++k) {
        auto at = static_cast<std::size_t>(k);
        if (dv.pmu[at]) {
            double g = dv.g_pmu[at], g2 = dv.g_pmu2[at];
            f[k] -= dv.ir_m[at] + g * dv.vr_m[at];
            f[n + k] -= dv.ii_m[at] + g * dv.vi_m[at];
            f[2 * n + k] += g2 * (s.vr[k] - dv.vr_m[at]);
            f[3 * n + k] += g2 * (s.vi[k] - dv.vi_m[at]);
        } else {
            int slot = dv.rtu_slot[at];
            double gamma = dv.gamma[at];
            f[4 * n + slot] = gamma * s.delta_g[slot] + s.lambda_r[k] * s.vr[k] +
                              s.lambda_i[k] * s.vi[k];
            f[4 * n + m + slot] = gamma * s.delta_b[slot] + s.lambda_r[k] * s.vi[k] -
                                  s.lambda_i[k] * s.vr[k];
        }
    }
    return f;
}

SpMat jacobian_matrix(const DeviceView& dv, const SplitAdmittance& adm, const NlState& s) {
    check_state(dv, s);
    const int n = dv.n;
    const int m = dv.rtu_count();
    const int dim = 4 * n + 2 * m;

    SpMat j = corrected_j(dv, adm, s.delta_g, s.delta_b);
    std::vector<Triplet> trips;
    trips.reserve(2 * static_cast<std::size_t>(j.nonZeros()) + 14 * static_cast<std::size_t>(n));
    for (int col = 0; col < j.outerSize(); ++col) {
        for (SpMat::InnerIterator it(j, col); it; ++it) {
            auto r = static_cast<int>(it.row());
            auto c = static_cast<int>(it.col());
            trips.emplace_back(r, c, it.value());                  // d(primal)/dx
            trips.emplace_back(2 * n + c, 2 * n + r, it.value());  // d(adjoint)/dlambda
        }
    }
    for (int k = 0; k < n; ++k) {
        auto at = static_cast<std::size_t>(k);
        if (dv.pmu[at]) {
            trips.emplace_back(2 * n + k, k, dv.g_pmu2[at]);
            trips.emplace_back(3 * n + k, n + k, dv.g_pmu2[at]);
            continue;
        }
        int s0 = dv.rtu_slot[at];
        int cg = 4 * n + s0;
        int cb = 4 * n + m + s0;
        double vr = s.vr[k], vi = s.vi[k];
        double lr = s.lambda_r[k], li = s.lambda_i[k];
        // Correction columns of the KCL rows.
        trips.emplace_back(k, cg, vr);
        trips.emplace_back(n + k, cg, vi);
        trips.emplace_back(k, cb, vi);
        trips.emplace_back(n + k, cb, -vr);
        // Correction columns of the stationarity-in-voltage rows.
        trips.emplace_back(2 * n + k, cg, lr);
        trips.emplace_back(3 * n + k, cg, li);
        trips.emplace_back(2 * n + k, cb, -li);
        trips.emplace_back(3 * n + k, cb, lr);
        // Stationarity-in-correction rows.
        trips.emplace_back(cg, k, lr);
        trips.emplace_back(cg, n + k, li);
        trips.emplace_back(cg, 2 * n + k, vr);
        trips.emplace_back(cg, 3 * n + k, vi);
        trips.emplace_back(cg, cg, dv.gamma[at]);
        trips.emplace_back(cb, k, -li);
        trips.emplace_back(cb, n + k, lr);
        trips.emplace_back(cb, 2 * n + k, vi);
        trips.emplace_back(cb, 3 * n + k, -vr);
        trips.emplace_back(cb, cb, dv.gamma[at]);
    }
    SpMat out(dim, dim);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

NlState initial_state(const SeCase& se, const SplitAdmittance& adm, const DeviceView& dv,
                      const NlOptions& opt) {
    const int n = dv.n;
    NlState s;
    if (opt.init == NlInit::from_linear) {
        EstimateResult lin = solve_linear_se(se, adm);
        s.vr = lin.vr;
        s.vi = lin.vi;
    } else {
        s.vr = Vec::Ones(n);
        s.vi = Vec::Zero(n);
    }
    s.lambda_r = Vec::Zero(n);
    s.lambda_i = Vec::Zero(n);
    s.delta_g = Vec::Zero(dv.rtu_count());
    s.delta_b = Vec::Zero(dv.rtu_count());
    return s;
}

NlState apply_step(const NlState& s, const Vec& dz, double step, int n, int m) {
    NlState out;
    out.vr = s.vr + step * dz.head(n);
    out.vi = s.vi + step * dz.segment(n, n);
    out.lambda_r = s.lambda_r + step * dz.segment(2 * n, n);
    out.lambda_i = s.lambda_i + step * dz.segment(3 * n, n);
    out.delta_g = s.delta_g + step * dz.segment(4 * n, m);
    out.delta_b = s.delta_b + step * dz.segment(4 * n + m, m);
    return out;
}

}  // namespace

Vec nl_kkt_residual_vector(const SeCase& se, const SplitAdmittance& adm, const NlState& s) {
    return residual_vector(make_device_view(se), adm, s);
}

SpMat nl_kkt_jacobian(const SeCase& se, const SplitAdmittance& adm, const NlState& s) {
    return jacobian_matrix(make_device_view(se), adm, s);
}

double kkt_residual(const SeCase& se, const NlState& s) {
    SplitAdmittance adm = build_split_admittance(se.grid);
    return kkt_residual(se, adm, s);
}

double kkt_residual(const SeCase& se, const SplitAdmittance& adm, const NlState& s) {
    return residual_vector(make_device_view(se), adm, s).cwiseAbs().maxCoeff();
}

EstimateResult solve_nonlinear_se(const SeCase& se, const NlOptions& opt) {
    SplitAdmittance adm = build_split_admittance(se.grid);
    return solve_nonlinear_se(se, adm, opt);
}

EstimateResult solve_nonlinear_se(const SeCase& se, const SplitAdmittance& adm,
                                  const NlOptions& opt) {
    if (!(opt.tol > 0.0)) throw ValidationError("tolerance must be positive");
    if (opt.max_iter < 1) throw ValidationError("max_iter must be at least 1");
    if (!(opt.damping > 0.0 && opt.damping <= 1.0))
        throw ValidationError("damping must lie in (0, 1]");

    DeviceView dv = make_device_view(se);
    const int n = dv.n;
    const int m = dv.rtu_count();

    NlState s = initial_state(se, adm, dv, opt);
    Vec f = residual_vector(dv, adm, s);
    double norm = f.cwiseAbs().maxCoeff();
    int iterations = 0;
    bool converged = norm < opt.tol;

    while (!converged && iterations < opt.max_iter) {
        SpMat j = jacobian_matrix(dv, adm, s);
        Vec dz = solve_sparse_linear(j, -f);

        // Full Newton step unless the residual grows; then halve, floored so a
        // bad quadrant cannot stall the iteration entirely.
        double step = opt.damping;
        NlState trial = apply_step(s, dz, step, n, m);
        Vec ft = residual_vector(dv, adm, trial);
        double trial_norm = ft.cwiseAbs().maxCoeff();
        while (trial_norm > norm && step > 0.125) {
            step *= 0.5;
            trial = apply_step(s, dz, step, n, m);
            ft = residual_vector(dv, adm, trial);
            trial_norm = ft.cwiseAbs().maxCoeff();
        }
        s = std::move(trial);
        f = std::move(ft);
        norm = trial_norm;
        ++iterations;
        converged = norm < opt.tol;
    }
    if (!converged) throw NotConverged(iterations, norm);

    EstimateResult res;
    res.vr = s.vr;
    res.vi = s.vi;
    res.lambda_r = s.lambda_r;
    res.lambda_i = s.lambda_i;
    res.rtu_buses = dv.rtu_buses;
    res.delta_g.assign(s.delta_g.begin(), s.delta_g.end());
    res.delta_b.assign(s.delta_b.begin(), s.delta_b.end());
    res.converged = true;
    res.iterations = iterations;
    res.objective = nonlinear_objective(se, res);
    return res;
}

double nonlinear_objective(const SeCase& se, const EstimateResult& r) {
    DeviceView dv = make_device_view(se);
    if (r.vr.size() != dv.n || r.vi.size() != dv.n)
        throw LengthMismatch("estimate length does not match the case");
    if (r.delta_g.size() != static_cast<std::size_t>(dv.rtu_count()) ||
        r.delta_b.size() != static_cast<std::size_t>(dv.rtu_count()))
        throw LengthMismatch("admittance corrections do not match the RTU count");

    double obj = 0.0;
    for (int k = 0; k < dv.n; ++k) {
        auto at = static_cast<std::size_t>(k);
        if (!dv.pmu[at]) continue;
        double er = r.vr[k] - dv.vr_m[at];
        double ei = r.vi[k] - dv.vi_m[at];
        obj += 0.5 * dv.g_pmu2[at] * (er * er + ei * ei);
    }
    for (int s = 0; s < dv.rtu_count(); ++s) {
        double gamma = dv.gamma[static_cast<std::size_t>(dv.rtu_buses[static_cast<std::size_t>(s)])];
        obj += 0.5 * gamma *
               (r.delta_g[static_cast<std::size_t>(s)] * r.delta_g[static_cast<std::size_t>(s)] +
                r.delta_b[static_cast<std::size_t>(s)] * r.delta_b[static_cast<std::size_t>(s)]);
    }
    return obj;
}

double nonlinear_objective_at_voltages(const SeCase& se, const SplitAdmittance& adm,
                                       const Vec& vr, const Vec& vi) {
    DeviceView dv = make_device_view(se);
    const int n = dv.n;
    if (vr.size() != n || vi.size() != n)
        throw LengthMismatch("voltage profile must have one entry per bus");

    Vec x(2 * n);
    x.head(n) = vr;
    x.tail(n) = vi;
    Vec yx = adm.blocks * x;

    double obj = 0.0;
    for (int k = 0; k < n; ++k) {
        auto at = static_cast<std::size_t>(k);
        if (dv.pmu[at]) {
            double er = vr[k] - dv.vr_m[at];
            double ei = vi[k] - dv.vi_m[at];
            obj += 0.5 * dv.g_pmu2[at] * (er * er + ei * ei);
            continue;
        }
        // KCL misfit of the mean-admittance draw at this fixed voltage...
        double er = yx[k] + dv.g_m[at] * vr[k] + dv.b_m[at] * vi[k];
        double ei = yx[n + k] - dv.b_m[at] * vr[k] + dv.g_m[at] * vi[k];
        double d = vr[k] * vr[k] + vi[k] * vi[k];
        if (d == 0.0) throw ZeroVoltage("zero voltage at bus index " + std::to_string(k));
        // ...absorbed exactly by the unique admittance correction.
        double dg = -(er * vr[k] + ei * vi[k]) / d;
        double db = (ei * vr[k] - er * vi[k]) / d;
        obj += 0.5 * dv.gamma[at] * (dg * dg + db * db);
    }
    return obj;
}

}  // namespace gridse
