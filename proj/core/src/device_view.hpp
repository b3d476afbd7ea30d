#pragma once

#include <vector>

#include "gridse/casegen.hpp"

namespace gridse::detail {

/// Per-bus estimator coefficients unpacked from an SeCase, indexed densely in
/// bus order. RTU buses get the mean admittance and weight; PMU buses the
/// conductance, its square, and the measurement constants.
struct DeviceView {
    int n = 0;
    std::vector<bool> pmu;        // per bus
    std::vector<int> rtu_slot;    // bus -> slot among RTUs, -1 for PMU buses
    std::vector<int> rtu_buses;   // slot -> bus
    std::vector<double> g_m, b_m, gamma;       // per bus, 0 at PMU buses
    std::vector<double> g_pmu, g_pmu2;         // per bus, 0 at RTU buses
    std::vector<double> vr_m, vi_m, ir_m, ii_m;  // PMU measurement means

    int rtu_count() const { return static_cast<int>(rtu_buses.size()); }
};

/// Throws IndexMismatch when devices do not align one-to-one with buses.
inline DeviceView make_device_view(const SeCase& se) {
    const int n = se.grid.size();
    if (static_cast<int>(se.devices.size()) != n)
        throw IndexMismatch("expected exactly one device per bus, got " +
                            std::to_string(se.devices.size()) + " devices for " +
                            std::to_string(n) + " buses");
    DeviceView dv;
    dv.n = n;
    dv.pmu.assign(static_cast<std::size_t>(n), false);
    dv.rtu_slot.assign(static_cast<std::size_t>(n), -1);
    dv.g_m.assign(static_cast<std::size_t>(n), 0.0);
    dv.b_m.assign(static_cast<std::size_t>(n), 0.0);
    dv.gamma.assign(static_cast<std::size_t>(n), 0.0);
    dv.g_pmu.assign(static_cast<std::size_t>(n), 0.0);
    dv.g_pmu2.assign(static_cast<std::size_t>(n), 0.0);
    dv.vr_m.assign(static_cast<std::size_t>(n), 0.0);
    dv.vi_m.assign(static_cast<std::size_t>(n), 0.0);
    dv.ir_m.assign(static_cast<std::size_t>(n), 0.0);
    dv.ii_m.assign(static_cast<std::size_t>(n), 0.0);

    for (int k = 0; k < n; ++k) {
        const Device& d = se.devices[static_cast<std::size_t>(k)];
        if (d.bus != se.grid.buses[static_cast<std::size_t>(k)].id)
            throw IndexMismatch("device order does not follow bus order at position " +
                                std::to_string(k));
        auto at = static_cast<std::size_t>(k);
        if (d.is_pmu()) {
            const PmuDevice& p = d.pmu();
            dv.pmu[at] = true;
            dv.g_pmu[at] = p.g_pmu;
            dv.g_pmu2[at] = p.g_pmu * p.g_pmu;
            dv.vr_m[at] = p.vr;
            dv.vi_m[at] = p.vi;
            dv.ir_m[at] = p.ir;
            dv.ii_m[at] = p.ii;
        } else {
            const RtuDevice& r = d.rtu();
            auto [g, b] = rtu_admittance(r.vm, r.p, r.q);
            dv.g_m[at] = g;
            dv.b_m[at] = b;
            dv.gamma[at] = r.gamma;
            dv.rtu_slot[at] = static_cast<int>(dv.rtu_buses.size());
            dv.rtu_buses.push_back(k);
        }
    }
    return dv;
}

}  // namespace gridse::detail
