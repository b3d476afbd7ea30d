#include "gridse/linear_se.hpp"

#include <algorithm>
#include <cmath>

#include "device_view.hpp"
#include "gridse/sparse_solver.hpp"

namespace gridse {

namespace {

using detail::DeviceView;
using detail::make_device_view;

/// Emits every KKT matrix contribution in one fixed order shared by the
/// one-shot and the reusable assembler. Entries landing on the same slot are
/// summed by the caller.
template <typename Emit>
void walk_matrix(const DeviceView& dv, const SplitAdmittance& adm, Emit&& emit) {
    const int n = dv.n;
    // Network block J gets the split admittance; the adjoint block gets its
    // transpose (conjugate-transpose of the complex matrix).
    for (int col = 0; col < adm.blocks.outerSize(); ++col) {
        for (SpMat::InnerIterator it(adm.blocks, col); it; ++it) {
            auto i = static_cast<int>(it.row());
            auto j = static_cast<int>(it.col());
            emit(i, j, it.value());
            emit(2 * n + j, 2 * n + i, it.value());
        }
    }
    for (int k = 0; k < n; ++k) {
        auto at = static_cast<std::size_t>(k);
        if (dv.pmu[at]) {
            double g = dv.g_pmu[at];
            // Device draw g*(v - v_meas) enters both KCL rows and, transposed,
            // both stationarity rows; the measurement misfit weight is g^2.
            emit(k, k, g);
            emit(n + k, n + k, g);
            emit(2 * n + k, 2 * n + k, g);
            emit(3 * n + k, 3 * n + k, g);
            emit(2 * n + k, k, dv.g_pmu2[at]);
            emit(3 * n + k, n + k, dv.g_pmu2[at]);
        } else {
            double g = dv.g_m[at], b = dv.b_m[at];
            // Mean-admittance draw conj(Ym)*v in the KCL rows...
            emit(k, k, g);
            emit(k, n + k, b);
            emit(n + k, k, -b);
            emit(n + k, n + k, g);
            // ...its transpose in the stationarity rows...
            emit(2 * n + k, 2 * n + k, g);
            emit(2 * n + k, 3 * n + k, -b);
            emit(3 * n + k, 2 * n + k, b);
            emit(3 * n + k, 3 * n + k, g);
            // ...and the eliminated correction currents delta_i = -lambda/gamma.
            emit(k, 2 * n + k, -1.0 / dv.gamma[at]);
            emit(n + k, 3 * n + k, -1.0 / dv.gamma[at]);
        }
    }
}

Vec build_rhs(const DeviceView& dv) {
    const int n = dv.n;
    Vec rhs = Vec::Zero(4 * n);
    for (int k = 0; k < n; ++k) {
        auto at = static_cast<std::size_t>(k);
        if (!dv.pmu[at]) continue;
        double g = dv.g_pmu[at];
        rhs[k] = dv.ir_m[at] + g * dv.vr_m[at];
        rhs[n + k] = dv.ii_m[at] + g * dv.vi_m[at];
        rhs[2 * n + k] = dv.g_pmu2[at] * dv.vr_m[at];
        rhs[3 * n + k] = dv.g_pmu2[at] * dv.vi_m[at];
    }
    return rhs;
}

void check_shape(const SeCase& se, const SplitAdmittance& adm) {
    if (adm.n != se.grid.size())
        throw IndexMismatch("admittance built for " + std::to_string(adm.n) +
                            " buses, case has " + std::to_string(se.grid.size()));
}

}  // namespace

KktSystem assemble_kkt(const SeCase& se, const SplitAdmittance& adm) {
    check_shape(se, adm);
    DeviceView dv = make_device_view(se);
    const int n = dv.n;

    std::vector<Triplet> trips;
    trips.reserve(2 * static_cast<std::size_t>(adm.blocks.nonZeros()) +
                  10 * static_cast<std::size_t>(n));
    walk_matrix(dv, adm, [&](int r, int c, double v) { trips.emplace_back(r, c, v); });

    KktSystem sys;
    sys.n = n;
    sys.matrix.resize(4 * n, 4 * n);
    sys.matrix.setFromTriplets(trips.begin(), trips.end());
    sys.matrix.makeCompressed();
    sys.rhs = build_rhs(dv);
    return sys;
}

struct KktAssembler::Impl {
    int n = 0;
    SpMat matrix;
    Vec rhs;
    std::vector<int> slots;  // emission order -> index into the value array
};

KktAssembler::KktAssembler(const SeCase& se, const SplitAdmittance& adm)
    : impl_(std::make_unique<Impl>()) {
    KktSystem sys = assemble_kkt(se, adm);
    impl_->n = sys.n;
    impl_->matrix = std::move(sys.matrix);
    impl_->rhs = std::move(sys.rhs);

    // Freeze the slot of every emitted entry so refresh() can rewrite values
    // without touching the pattern.
    const SpMat& m = impl_->matrix;
    DeviceView dv = make_device_view(se);
    walk_matrix(dv, adm, [&](int r, int c, double) {
        const int* begin = m.innerIndexPtr() + m.outerIndexPtr()[c];
        const int* end = m.innerIndexPtr() + m.outerIndexPtr()[c + 1];
        const int* hit = std::lower_bound(begin, end, r);
        impl_->slots.push_back(static_cast<int>(hit - m.innerIndexPtr()));
    });
}

KktAssembler::~KktAssembler() = default;
KktAssembler::KktAssembler(KktAssembler&&) noexcept = default;

void KktAssembler::refresh(const SeCase& se, const SplitAdmittance& adm) {
    check_shape(se, adm);
    if (adm.n != impl_->n)
        throw IndexMismatch("refresh with a different bus count");
    DeviceView dv = make_device_view(se);
    double* values = impl_->matrix.valuePtr();
    std::fill(values, values + impl_->matrix.nonZeros(), 0.0);
    std::size_t next = 0;
    walk_matrix(dv, adm, [&](int, int, double v) {
        values[impl_->slots[next++]] += v;
    });
    impl_->rhs = build_rhs(dv);
}

const SpMat& KktAssembler::matrix() const { return impl_->matrix; }
const Vec& KktAssembler::rhs() const { return impl_->rhs; }
int KktAssembler::n() const { return impl_->n; }

EstimateResult solve_linear_se(const SeCase& se) {
    SplitAdmittance adm = build_split_admittance(se.grid);
    return solve_linear_se(se, adm);
}

EstimateResult solve_linear_se(const SeCase& se, const SplitAdmittance& adm) {
    KktSystem sys = assemble_kkt(se, adm);
    const int n = sys.n;

    SparseLuSolver lu;
    lu.compute(sys.matrix);
    Vec z = lu.solve(sys.rhs);

    // One refinement step if the direct solve misses the residual contract.
    const double bound = 1e-9 * std::max(1.0, sys.rhs.cwiseAbs().maxCoeff());
    Vec r = sys.rhs - sys.matrix * z;
    bool good = r.cwiseAbs().maxCoeff() <= bound;
    if (!good) {
        z += lu.solve(r);
        r = sys.rhs - sys.matrix * z;
        good = r.cwiseAbs().maxCoeff() <= bound;
    }

    DeviceView dv = make_device_view(se);
    EstimateResult res;
    res.vr = z.head(n);
    res.vi = z.segment(n, n);
    res.lambda_r = z.segment(2 * n, n);
    res.lambda_i = z.tail(n);
    res.rtu_buses = dv.rtu_buses;
    res.delta_ir.reserve(dv.rtu_buses.size());
    res.delta_ii.reserve(dv.rtu_buses.size());
    for (int k : dv.rtu_buses) {
        double gamma = dv.gamma[static_cast<std::size_t>(k)];
        res.delta_ir.push_back(-res.lambda_r[k] / gamma);
        res.delta_ii.push_back(-res.lambda_i[k] / gamma);
    }
    res.converged = good;
    res.iterations = 1;
    res.objective = linear_objective(se, res);
    return res;
}

double linear_objective(const SeCase& se, const EstimateResult& r) {
    DeviceView dv = make_device_view(se);
    if (r.vr.size() != dv.n || r.vi.size() != dv.n)
        throw LengthMismatch("estimate length does not match the case");
    if (r.delta_ir.size() != static_cast<std::size_t>(dv.rtu_count()) ||
        r.delta_ii.size() != static_cast<std::size_t>(dv.rtu_count()))
        throw LengthMismatch("correction currents do not match the RTU count");

    double obj = 0.0;
    for (int k = 0; k < dv.n; ++k) {
        auto at = static_cast<std::size_t>(k);
        if (!dv.pmu[at]) continue;
        double er = r.vr[k] - dv.vr_m[at];
        double ei = r.vi[k] - dv.vi_m[at];
        obj += 0.5 * dv.g_pmu2[at] * (er * er + ei * ei);
    }
    for (std::size_t s = 0; s < r.delta_ir.size(); ++s) {
        double gamma = dv.gamma[static_cast<std::size_t>(dv.rtu_buses[s])];
        obj += 0.5 * gamma * (r.delta_ir[s] * r.delta_ir[s] + r.delta_ii[s] * r.delta_ii[s]);
    }
    return obj;
}

}  // namespace gridse
