#include "gridse/powerflow.hpp"

#include <cmath>
#include <limits>

#include "gridse/network.hpp"
#include "gridse/sparse_solver.hpp"

namespace gridse {

namespace {

/// Below this squared voltage magnitude a constant-power bus has no
/// meaningful current linearization; treated as voltage collapse.
constexpr double kCollapseFloor = 1e-4;

struct Problem {
    const GridCase* c = nullptr;
    SplitAdmittance adm;
    int n = 0;
    int slack = -1;
    std::vector<int> pv_pos;      // bus -> pv slot or -1
    std::vector<int> pv_buses;    // pv slot -> bus
    std::vector<double> p_fixed;  // net P injection, all buses (slack value unused)
    std::vector<double> q_fixed;  // net Q injection at pq buses
    std::vector<double> vset;     // slack/pv setpoints (by bus; 0 elsewhere)

    int dim() const { return 2 * n + static_cast<int>(pv_buses.size()); }
};

Problem make_problem(const GridCase& c) {
    Problem pb;
    pb.c = &c;
    pb.adm = build_split_admittance(c);
    pb.n = c.size();
    pb.slack = slack_index(c);
    pb.pv_pos.assign(static_cast<std::size_t>(pb.n), -1);
    pb.p_fixed.assign(static_cast<std::size_t>(pb.n), 0.0);
    pb.q_fixed.assign(static_cast<std::size_t>(pb.n), 0.0);
    pb.vset.assign(static_cast<std::size_t>(pb.n), 0.0);

    BusIndex index = make_bus_index(c);
    std::vector<double> pg(static_cast<std::size_t>(pb.n), 0.0);
    std::vector<double> qg(static_cast<std::size_t>(pb.n), 0.0);
    for (const Gen& g : c.gens) {
        int k = index.at(g.bus);
        pg[static_cast<std::size_t>(k)] = g.pg;
        qg[static_cast<std::size_t>(k)] = g.qg;
        if (c.buses[k].kind != BusKind::pq) pb.vset[static_cast<std::size_t>(k)] = g.vset;
    }
    for (int k = 0; k < pb.n; ++k) {
        const Bus& b = c.buses[k];
        pb.p_fixed[static_cast<std::size_t>(k)] = pg[static_cast<std::size_t>(k)] - b.pd;
        pb.q_fixed[static_cast<std::size_t>(k)] = qg[static_cast<std::size_t>(k)] - b.qd;
        if (b.kind == BusKind::pv) {
            pb.pv_pos[static_cast<std::size_t>(k)] = static_cast<int>(pb.pv_buses.size());
            pb.pv_buses.push_back(k);
        }
    }
    return pb;
}

/// Net reactive injection at bus k for the iterate x (pv buses read their
/// free variable).
double q_net_at(const Problem& pb, const Vec& x, int k) {
    int p = pb.pv_pos[static_cast<std::size_t>(k)];
    return p >= 0 ? x[2 * pb.n + p] : pb.q_fixed[static_cast<std::size_t>(k)];
}

Vec residual(const Problem& pb, const Vec& x, int iteration, double last_norm) {
    const int n = pb.n;
    Vec f(pb.dim());
    Vec yv = pb.adm.blocks * x.head(2 * n);
    for (int k = 0; k < n; ++k) {
        double vr = x[k], vi = x[n + k];
        if (k == pb.slack) {
            double vs = pb.vset[static_cast<std::size_t>(k)];
            double va = pb.c->buses[static_cast<std::size_t>(k)].va_init;
            f[k] = vr - vs * std::cos(va);
            f[n + k] = vi - vs * std::sin(va);
            continue;
        }
        double d = vr * vr + vi * vi;
        if (d < kCollapseFloor) throw Diverged(iteration, last_norm);
        double p = pb.p_fixed[static_cast<std::size_t>(k)];
        double q = q_net_at(pb, x, k);
        f[k] = yv[k] - (p * vr + q * vi) / d;
        f[n + k] = yv[n + k] - (p * vi - q * vr) / d;
    }
    for (std::size_t s = 0; s < pb.pv_buses.size(); ++s) {
        int k = pb.pv_buses[s];
        double vs = pb.vset[static_cast<std::size_t>(k)];
        f[2 * n + static_cast<int>(s)] = x[k] * x[k] + x[n + k] * x[n + k] - vs * vs;
    }
    return f;
}

SpMat jacobian(const Problem& pb, const Vec& x) {
    const int n = pb.n;
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(pb.adm.blocks.nonZeros()) + 7 * static_cast<std::size_t>(n));

    for (int col = 0; col < pb.adm.blocks.outerSize(); ++col) {
        for (SpMat::InnerIterator it(pb.adm.blocks, col); it; ++it) {
            int bus = static_cast<int>(it.row()) % n;
            if (bus == pb.slack) continue;  // slack rows become identities
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                               it.value());
        }
    }
    trips.emplace_back(pb.slack, pb.slack, 1.0);
    trips.emplace_back(n + pb.slack, n + pb.slack, 1.0);

    for (int k = 0; k < n; ++k) {
        if (k == pb.slack) continue;
        double vr = x[k], vi = x[n + k];
        double d = vr * vr + vi * vi;
        double p = pb.p_fixed[static_cast<std::size_t>(k)];
        double q = q_net_at(pb, x, k);
        double ir = (p * vr + q * vi) / d;
        double ii = (p * vi - q * vr) / d;
        // d/dv of the constant-power injection current, by the quotient rule.
        trips.emplace_back(k, k, -(p - ir * 2.0 * vr) / d);
        trips.emplace_back(k, n + k, -(q - ir * 2.0 * vi) / d);
        trips.emplace_back(n + k, k, -(-q - ii * 2.0 * vr) / d);
        trips.emplace_back(n + k, n + k, -(p - ii * 2.0 * vi) / d);
        int pv = pb.pv_pos[static_cast<std::size_t>(k)];
        if (pv >= 0) {
            trips.emplace_back(k, 2 * n + pv, -vi / d);
            trips.emplace_back(n + k, 2 * n + pv, vr / d);
            trips.emplace_back(2 * n + pv, k, 2.0 * vr);
            trips.emplace_back(2 * n + pv, n + k, 2.0 * vi);
        }
    }
    SpMat j(pb.dim(), pb.dim());
    j.setFromTriplets(trips.begin(), trips.end());
    return j;
}

Vec initial_state(const Problem& pb, PfInit init) {
    const int n = pb.n;
    Vec x = Vec::Zero(pb.dim());
    for (int k = 0; k < n; ++k) {
        const Bus& b = pb.c->buses[static_cast<std::size_t>(k)];
        double vm = b.kind == BusKind::pq ? b.vm_init : pb.vset[static_cast<std::size_t>(k)];
        double va = (init == PfInit::from_case || b.kind == BusKind::slack) ? b.va_init : 0.0;
        x[k] = vm * std::cos(va);
        x[n + k] = vm * std::sin(va);
    }
    for (std::size_t s = 0; s < pb.pv_buses.size(); ++s)
        x[2 * n + static_cast<int>(s)] =
            pb.q_fixed[static_cast<std::size_t>(pb.pv_buses[s])];
    return x;
}

}  // namespace

PfSolution solve_power_flow(const GridCase& c, const PfOptions& opt) {
    if (!(opt.tol > 0.0)) throw ValidationError("power flow tolerance must be positive");
    if (opt.max_iter < 1) throw ValidationError("max_iter must be at least 1");
    validate(c);
    Problem pb = make_problem(c);
    const int n = pb.n;

    Vec x = initial_state(pb, opt.init);
    double norm = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    for (int it = 1; it <= opt.max_iter; ++it) {
        Vec f = residual(pb, x, it, norm);
        SpMat j = jacobian(pb, x);
        x -= solve_sparse_linear(j, f);
        f = residual(pb, x, it, norm);
        norm = f.cwiseAbs().maxCoeff();
        iterations = it;
        if (norm < opt.tol) {
            converged = true;
            break;
        }
    }
    if (!converged) throw Diverged(iterations, norm);

    PfSolution sol;
    sol.vr = x.head(n);
    sol.vi = x.segment(n, n);
    sol.iterations = iterations;
    sol.p_net.resize(static_cast<std::size_t>(n));
    sol.q_net.resize(static_cast<std::size_t>(n));
    Vec yv = pb.adm.blocks * x.head(2 * n);
    for (int k = 0; k < n; ++k) {
        if (k == pb.slack) {
            // The slack picks up whatever net injection balances the system.
            double vr = x[k], vi = x[n + k];
            sol.p_net[static_cast<std::size_t>(k)] = vr * yv[k] + vi * yv[n + k];
            sol.q_net[static_cast<std::size_t>(k)] = vi * yv[k] - vr * yv[n + k];
        } else {
            sol.p_net[static_cast<std::size_t>(k)] = pb.p_fixed[static_cast<std::size_t>(k)];
            sol.q_net[static_cast<std::size_t>(k)] = q_net_at(pb, x, k);
        }
    }
    sol.max_mismatch = pf_residual(c, sol.vr, sol.vi, sol.p_net, sol.q_net);
    return sol;
}

double pf_residual(const GridCase& c, const Vec& vr, const Vec& vi,
                   const std::vector<double>& p_net, const std::vector<double>& q_net) {
    const int n = c.size();
    if (vr.size() != n || vi.size() != n ||
        p_net.size() != static_cast<std::size_t>(n) || q_net.size() != static_cast<std::size_t>(n))
        throw LengthMismatch("pf_residual inputs must have one entry per bus");
    SplitAdmittance adm = build_split_admittance(c);
    int slack = slack_index(c);
    Vec v(2 * n);
    v.head(n) = vr;
    v.tail(n) = vi;
    Vec yv = adm.blocks * v;
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
        if (k == slack) continue;
        double d = vr[k] * vr[k] + vi[k] * vi[k];
        if (d == 0.0) throw ZeroVoltage("zero voltage at bus index " + std::to_string(k));
        double p = p_net[static_cast<std::size_t>(k)];
        double q = q_net[static_cast<std::size_t>(k)];
        worst = std::max(worst, std::abs(yv[k] - (p * vr[k] + q * vi[k]) / d));
        worst = std::max(worst, std::abs(yv[n + k] - (p * vi[k] - q * vr[k]) / d));
    }
    return worst;
}

}  // namespace gridse
