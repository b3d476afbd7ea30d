#include "gridse/casegen.hpp"

#include <cmath>

#include "gridse/network.hpp"
#include "gridse/rng.hpp"

namespace gridse {

void validate(const NoiseSpec& spec) {
    auto frac = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0))
            throw ValidationError(std::string(name) + " must lie in [0, 1]");
    };
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError(std::string(name) + " must be nonnegative");
    };
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ValidationError(std::string(name) + " must be positive");
    };
    frac(spec.frac_pmu_perfect, "frac_pmu_perfect");
    frac(spec.frac_pmu_noisy, "frac_pmu_noisy");
    frac(spec.degraded_frac, "degraded_frac");
    if (spec.frac_pmu_perfect + spec.frac_pmu_noisy > 1.0)
        throw ValidationError("PMU fractions must not exceed 1 combined");
    nonneg(spec.pmu_sigma_rel, "pmu_sigma_rel");
    nonneg(spec.rtu_sigma_vm_rel, "rtu_sigma_vm_rel");
    nonneg(spec.rtu_sigma_pq_rel, "rtu_sigma_pq_rel");
    nonneg(spec.weight_exponent, "weight_exponent");
    positive(spec.g_pmu, "g_pmu");
    positive(spec.degraded_sigma_mult, "degraded_sigma_mult");
    positive(spec.degraded_weight_div, "degraded_weight_div");
    positive(spec.rtu_gamma, "rtu_gamma");
}

std::vector<DeviceKind> assign_devices(const GridCase& c, const NoiseSpec& spec,
                                       std::uint64_t seed) {
    validate(spec);
    const int n = c.size();
    auto n_perfect = static_cast<int>(std::floor(spec.frac_pmu_perfect * n));
    auto n_noisy = static_cast<int>(std::floor(spec.frac_pmu_noisy * n));

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    rng::Stream assign_stream(seed, 0, rng::channel_id(rng::Domain::assign, 0));
    rng::shuffle(order, assign_stream);

    std::vector<DeviceKind> kinds(static_cast<std::size_t>(n), DeviceKind::rtu);
    std::vector<int> rtu_buses;
    for (int i = 0; i < n; ++i) {
        int bus = order[static_cast<std::size_t>(i)];
        if (i < n_perfect)
            kinds[static_cast<std::size_t>(bus)] = DeviceKind::pmu_perfect;
        else if (i < n_perfect + n_noisy)
            kinds[static_cast<std::size_t>(bus)] = DeviceKind::pmu_noisy;
        else
            rtu_buses.push_back(bus);
    }

    auto n_degraded =
        static_cast<int>(std::floor(spec.degraded_frac * static_cast<double>(rtu_buses.size())));
    if (n_degraded > 0) {
        rng::Stream degraded_stream(seed, 0, rng::channel_id(rng::Domain::degraded, 0));
        rng::shuffle(rtu_buses, degraded_stream);
        for (int i = 0; i < n_degraded; ++i)
            kinds[static_cast<std::size_t>(rtu_buses[static_cast<std::size_t>(i)])] =
                DeviceKind::rtu_degraded;
    }
    return kinds;
}

std::pair<double, double> rtu_admittance(double vm, double p, double q) {
    if (!(vm > 0.0)) throw ZeroVoltage("rtu_admittance needs a positive voltage magnitude");
    double d = vm * vm;
    return {p / d, q / d};
}

SeCase generate_se_case(const PfSolution& pf, const GridCase& c, const NoiseSpec& spec,
                        std::uint64_t seed) {
    return generate_se_case(pf, c, spec, assign_devices(c, spec, seed), seed, c.name);
}

SeCase generate_se_case(const PfSolution& pf, const GridCase& c, const NoiseSpec& spec,
                        const std::vector<DeviceKind>& assignment, std::uint64_t noise_seed,
                        std::string case_name) {
    validate(c);
    validate(spec);
    const int n = c.size();
    if (static_cast<int>(assignment.size()) != n)
        throw IndexMismatch("device assignment must have one entry per bus");
    if (pf.vr.size() != n || pf.vi.size() != n)
        throw IndexMismatch("power-flow solution must have one entry per bus");

    // Net injection currents of the true state; the measurement means.
    SplitAdmittance adm = build_split_admittance(c);
    Vec v(2 * n);
    v.head(n) = pf.vr;
    v.tail(n) = pf.vi;
    Vec inj = adm.blocks * v;

    SeCase se;
    se.case_name = std::move(case_name);
    if (se.case_name.empty()) se.case_name = c.name;
    se.grid = c;
    se.seed = noise_seed;
    se.devices.reserve(static_cast<std::size_t>(n));

    for (int k = 0; k < n; ++k) {
        double vr = pf.vr[k], vi = pf.vi[k];
        double ir = inj[k], ii = inj[n + k];
        Device dev;
        dev.bus = c.buses[static_cast<std::size_t>(k)].id;
        DeviceKind kind = assignment[static_cast<std::size_t>(k)];

        auto draw = [&](std::uint64_t channel, double mean, double rel) {
            rng::Stream s(noise_seed, 0,
                          rng::channel_id(rng::Domain::gen_meas, static_cast<std::uint64_t>(k),
                                          channel));
            return s.normal(mean, effective_sigma(mean, rel));
        };

        if (kind == DeviceKind::pmu_perfect || kind == DeviceKind::pmu_noisy) {
            PmuDevice pmu;
            pmu.g_pmu = spec.g_pmu;
            pmu.perfect = kind == DeviceKind::pmu_perfect;
            pmu.sigma_rel = pmu.perfect ? 0.0 : spec.pmu_sigma_rel;
            pmu.vr = draw(0, vr, pmu.sigma_rel);
            pmu.vi = draw(1, vi, pmu.sigma_rel);
            pmu.ir = draw(2, ir, pmu.sigma_rel);
            pmu.ii = draw(3, ii, pmu.sigma_rel);
            dev.model = pmu;
        } else {
            bool degraded = kind == DeviceKind::rtu_degraded;
            double mult = degraded ? spec.degraded_sigma_mult : 1.0;
            RtuDevice rtu;
            rtu.sigma_vm_rel = spec.rtu_sigma_vm_rel * mult;
            rtu.sigma_p_rel = spec.rtu_sigma_pq_rel * mult;
            rtu.sigma_q_rel = spec.rtu_sigma_pq_rel * mult;
            rtu.gamma = degraded ? spec.rtu_gamma /
                                       std::pow(spec.degraded_weight_div, spec.weight_exponent)
                                 : spec.rtu_gamma;
            // Net consumed power of the true state (load positive).
            double vm = std::hypot(vr, vi);
            double p = -(vr * ir + vi * ii);
            double q = -(vi * ir - vr * ii);
            rtu.vm = std::max(draw(0, vm, rtu.sigma_vm_rel), kVmFloor);
            rtu.p = draw(1, p, rtu.sigma_p_rel);
            rtu.q = draw(2, q, rtu.sigma_q_rel);
            dev.model = rtu;
        }
        se.devices.push_back(std::move(dev));
    }
    se.truth = TruthState{pf.vr, pf.vi};
    validate(se);
    return se;
}

void validate(const SeCase& se) {
    validate(se.grid);
    const int n = se.grid.size();
    if (static_cast<int>(se.devices.size()) != n)
        throw IndexMismatch("expected exactly one device per bus, got " +
                            std::to_string(se.devices.size()) + " devices for " +
                            std::to_string(n) + " buses");
    for (int k = 0; k < n; ++k) {
        const Device& d = se.devices[static_cast<std::size_t>(k)];
        if (d.bus != se.grid.buses[static_cast<std::size_t>(k)].id)
            throw IndexMismatch("device " + std::to_string(k) + " is at bus " +
                                std::to_string(d.bus) + " but bus " +
                                std::to_string(se.grid.buses[static_cast<std::size_t>(k)].id) +
                                " holds this position");
        if (d.is_pmu()) {
            const PmuDevice& p = d.pmu();
            if (!(p.g_pmu > 0.0))
                throw ValidationError("PMU at bus " + std::to_string(d.bus) +
                                      " needs a positive g_pmu");
            if (p.sigma_rel < 0.0 || (p.perfect && p.sigma_rel != 0.0))
                throw ValidationError("inconsistent PMU sigma at bus " + std::to_string(d.bus));
        } else {
            const RtuDevice& r = d.rtu();
            if (!(r.vm > 0.0))
                throw ZeroVoltage("RTU at bus " + std::to_string(d.bus) +
                                  " needs a positive voltage magnitude");
            if (!(r.gamma > 0.0))
                throw ValidationError("RTU at bus " + std::to_string(d.bus) +
                                      " needs a positive weight");
            if (r.sigma_vm_rel < 0.0 || r.sigma_p_rel < 0.0 || r.sigma_q_rel < 0.0)
                throw ValidationError("negative RTU sigma at bus " + std::to_string(d.bus));
        }
    }
    if (se.truth && (se.truth->vr.size() != n || se.truth->vi.size() != n))
        throw IndexMismatch("truth vectors must have one entry per bus");
}

}  // namespace gridse
