#pragma once

// Shared builders for test inputs: tiny hand-written grids, randomized
// mid-size grids, measurement cases around a solved power flow, and a
// central-difference checker for the nonlinear KKT Jacobian.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "gridse/casegen.hpp"
#include "gridse/network.hpp"
#include "gridse/nonlinear_se.hpp"
#include "gridse/powerflow.hpp"
#include "gridse/rng.hpp"
#include "gridse/synth.hpp"
#include "gridse/types.hpp"

namespace testsup {

/// Slack feeding one loaded PQ bus over a single line.
inline gridse::GridCase two_bus_case() {
    gridse::GridCase c;
    c.name = "two_bus";
    c.buses.push_back({1, gridse::BusKind::slack, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0});
    c.buses.push_back({2, gridse::BusKind::pq, 0.3, 0.1, 0.0, 0.0, 1.0, 0.0});
    c.branches.push_back({1, 2, 0.01, 0.1, 0.0, 1.0, 0.0, true});
    c.gens.push_back({1, 0.0, 0.0, 1.02});
    return c;
}

/// Slack + PV + PQ triangle with a tapped/shifted transformer, line charging
/// and a bus shunt — every stamping feature in one small case.
inline gridse::GridCase three_bus_mixed() {
    gridse::GridCase c;
    c.name = "three_bus_mixed";
    c.buses.push_back({1, gridse::BusKind::slack, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0});
    c.buses.push_back({2, gridse::BusKind::pv, 0.1, 0.02, 0.0, 0.0, 1.0, 0.0});
    c.buses.push_back({3, gridse::BusKind::pq, 0.25, 0.08, 0.0, 0.04, 1.0, 0.0});
    c.branches.push_back({1, 2, 0.02, 0.12, 0.03, 1.0, 0.0, true});
    c.branches.push_back({1, 3, 0.015, 0.09, 0.0, 1.04, 0.02, true});
    c.branches.push_back({2, 3, 0.03, 0.15, 0.02, 1.0, 0.0, true});
    c.gens.push_back({1, 0.0, 0.0, 1.03});
    c.gens.push_back({2, 0.2, 0.0, 1.01});
    return c;
}

/// Randomized solvable grid with size and shape drawn from the seed.
inline gridse::GridCase random_case(std::uint64_t seed, int min_buses = 4, int max_buses = 30) {
    gridse::rng::Stream s(seed, 0, gridse::rng::channel_id(gridse::rng::Domain::misc, 99));
    gridse::SynthOptions opt;
    opt.buses = min_buses +
                static_cast<int>(s.next_below(static_cast<std::uint32_t>(max_buses - min_buses + 1)));
    opt.seed = seed;
    opt.pv_frac = 0.25 * s.uniform01();
    opt.chord_frac = 0.1 + 0.5 * s.uniform01();
    opt.xfmr_frac = 0.3 * s.uniform01();
    opt.load_scale = 0.005 + 0.03 * s.uniform01();
    return gridse::make_synthetic_grid(opt);
}

/// Power-flow truth plus a measurement layer. noise_mult scales every sigma
/// (0 gives an exact, KCL-feasible case).
inline gridse::SeCase make_se_case(const gridse::GridCase& c, std::uint64_t seed,
                                   double noise_mult = 1.0, double degraded_frac = 0.0) {
    gridse::PfSolution pf = gridse::solve_power_flow(c);
    gridse::NoiseSpec spec;
    spec.pmu_sigma_rel *= noise_mult;
    spec.rtu_sigma_vm_rel *= noise_mult;
    spec.rtu_sigma_pq_rel *= noise_mult;
    spec.degraded_frac = degraded_frac;
    return gridse::generate_se_case(pf, c, spec, seed);
}

inline int nl_state_dim(const gridse::NlState& s) {
    return static_cast<int>(s.vr.size() + s.vi.size() + s.lambda_r.size() + s.lambda_i.size() +
                            s.delta_g.size() + s.delta_b.size());
}

/// Reference into the state component at the Jacobian's column position:
/// [vr; vi; lambda_r; lambda_i; delta_g; delta_b].
inline double& nl_state_at(gridse::NlState& s, int idx) {
    int n = static_cast<int>(s.vr.size());
    int m = static_cast<int>(s.delta_g.size());
    if (idx < n) return s.vr(idx);
    idx -= n;
    if (idx < n) return s.vi(idx);
    idx -= n;
    if (idx < n) return s.lambda_r(idx);
    idx -= n;
    if (idx < n) return s.lambda_i(idx);
    idx -= n;
    if (idx < m) return s.delta_g(idx);
    idx -= m;
    if (idx < m) return s.delta_b(idx);
    throw std::out_of_range("nl state index");
}

/// Max absolute difference between the analytic Jacobian and central finite
/// differences of the KKT residual, scaled by max(1, largest analytic entry).
inline double fd_jacobian_err(const gridse::SeCase& se, const gridse::SplitAdmittance& adm,
                              const gridse::NlState& state, double h = 1e-6) {
    Eigen::MatrixXd analytic(gridse::nl_kkt_jacobian(se, adm, state));
    double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
    int dim = nl_state_dim(state);
    double worst = 0.0;
    for (int j = 0; j < dim; ++j) {
        gridse::NlState up = state;
        gridse::NlState down = state;
        nl_state_at(up, j) += h;
        nl_state_at(down, j) -= h;
        gridse::Vec col = (gridse::nl_kkt_residual_vector(se, adm, up) -
                           gridse::nl_kkt_residual_vector(se, adm, down)) /
                          (2.0 * h);
        worst = std::max(worst, (col - analytic.col(j)).cwiseAbs().maxCoeff());
    }
    return worst / scale;
}

/// A generic interior point with every variable active, for derivative tests.
inline gridse::NlState random_nl_state(const gridse::SeCase& se, std::uint64_t seed) {
    int n = se.grid.size();
    int m = 0;
    for (const auto& d : se.devices) m += d.is_pmu() ? 0 : 1;
    gridse::rng::Stream s(seed, 0, gridse::rng::channel_id(gridse::rng::Domain::misc, 77));
    gridse::NlState st;
    st.vr.resize(n);
    st.vi.resize(n);
    st.lambda_r.resize(n);
    st.lambda_i.resize(n);
    st.delta_g.resize(m);
    st.delta_b.resize(m);
    for (int i = 0; i < n; ++i) {
        st.vr(i) = 0.9 + 0.2 * s.uniform01();
        st.vi(i) = -0.1 + 0.2 * s.uniform01();
        st.lambda_r(i) = -0.5 + s.uniform01();
        st.lambda_i(i) = -0.5 + s.uniform01();
    }
    for (int j = 0; j < m; ++j) {
        st.delta_g(j) = -0.2 + 0.4 * s.uniform01();
        st.delta_b(j) = -0.2 + 0.4 * s.uniform01();
    }
    return st;
}

}  // namespace testsup
