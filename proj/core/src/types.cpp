#include "gridse/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace gridse {

namespace {

/// Equal up to a couple of floating rounding steps: loads, shunts, injections
/// and angles pass through a unit conversion at the file boundary (MW on the
/// MVA base, degrees to radians), each direction costing up to one rounding.
bool near_ulp(double a, double b) {
    if (a == b) return true;
    double scale = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= 4.0 * std::numeric_limits<double>::epsilon() * scale;
}

}  // namespace

BusIndex make_bus_index(const GridCase& c) {
    BusIndex index;
    index.reserve(c.buses.size());
    for (int i = 0; i < c.size(); ++i) {
        auto [it, inserted] = index.emplace(c.buses[i].id, i);
        if (!inserted)
            throw ValidationError("duplicate bus id " + std::to_string(c.buses[i].id));
    }
    return index;
}

int slack_index(const GridCase& c) {
    int found = -1;
    for (int i = 0; i < c.size(); ++i) {
        if (c.buses[i].kind != BusKind::slack) continue;
        if (found >= 0)
            throw ValidationError("more than one slack bus (" +
                                  std::to_string(c.buses[found].id) + " and " +
                                  std::to_string(c.buses[i].id) + ")");
        found = i;
    }
    if (found < 0) throw ValidationError("no slack bus");
    return found;
}

void validate(const GridCase& c) {
    if (!(c.base_mva > 0.0))
        throw ValidationError("baseMVA must be positive, got " + std::to_string(c.base_mva));
    if (c.buses.empty()) throw ValidationError("case has no buses");

    BusIndex index = make_bus_index(c);  // rejects duplicate ids
    slack_index(c);                      // rejects zero or multiple slacks

    for (const Bus& b : c.buses) {
        if (!std::isfinite(b.pd) || !std::isfinite(b.qd) || !std::isfinite(b.gs) ||
            !std::isfinite(b.bs) || !std::isfinite(b.vm_init) || !std::isfinite(b.va_init))
            throw ValidationError("non-finite field on bus " + std::to_string(b.id));
        if (!(b.vm_init > 0.0))
            throw ValidationError("non-positive initial voltage magnitude on bus " +
                                  std::to_string(b.id));
    }

    for (std::size_t k = 0; k < c.branches.size(); ++k) {
        const Branch& br = c.branches[k];
        std::string where = "branch " + std::to_string(k + 1) + " (" +
                            std::to_string(br.from) + "-" + std::to_string(br.to) + ")";
        if (!index.count(br.from) || !index.count(br.to))
            throw ValidationError(where + ": endpoint is not a known bus");
        if (br.from == br.to) throw ValidationError(where + ": self loop");
        if (!std::isfinite(br.r) || !std::isfinite(br.x) || !std::isfinite(br.b_chg) ||
            !std::isfinite(br.tap) || !std::isfinite(br.shift))
            throw ValidationError(where + ": non-finite parameter");
        if (br.in_service && br.r == 0.0 && br.x == 0.0)
            throw ValidationError(where + ": zero series impedance");
        if (!(br.tap > 0.0)) throw ValidationError(where + ": non-positive tap ratio");
    }

    std::unordered_set<int> pv_or_slack;
    for (const Bus& b : c.buses)
        if (b.kind != BusKind::pq) pv_or_slack.insert(b.id);

    std::unordered_set<int> gen_buses;
    for (const Gen& g : c.gens) {
        if (!index.count(g.bus))
            throw ValidationError("generator at unknown bus " + std::to_string(g.bus));
        if (!std::isfinite(g.pg) || !std::isfinite(g.qg) || !std::isfinite(g.vset))
            throw ValidationError("non-finite field on generator at bus " +
                                  std::to_string(g.bus));
        if (!(g.vset > 0.0))
            throw ValidationError("non-positive voltage setpoint on generator at bus " +
                                  std::to_string(g.bus));
        if (!gen_buses.insert(g.bus).second)
            throw ValidationError("more than one generator at bus " + std::to_string(g.bus));
        pv_or_slack.erase(g.bus);
    }
    if (!pv_or_slack.empty())
        throw ValidationError("bus " + std::to_string(*pv_or_slack.begin()) +
                              " is slack or pv but has no generator");
}

bool structurally_equal(const GridCase& a, const GridCase& b) {
    if (a.name != b.name || a.base_mva != b.base_mva) return false;
    if (a.buses.size() != b.buses.size() || a.branches.size() != b.branches.size() ||
        a.gens.size() != b.gens.size())
        return false;
    for (std::size_t i = 0; i < a.buses.size(); ++i) {
        const Bus &x = a.buses[i], &y = b.buses[i];
        if (x.id != y.id || x.kind != y.kind || !near_ulp(x.pd, y.pd) ||
            !near_ulp(x.qd, y.qd) || !near_ulp(x.gs, y.gs) || !near_ulp(x.bs, y.bs) ||
            x.vm_init != y.vm_init || !near_ulp(x.va_init, y.va_init))
            return false;
    }
    for (std::size_t i = 0; i < a.branches.size(); ++i) {
        const Branch &x = a.branches[i], &y = b.branches[i];
        if (x.from != y.from || x.to != y.to || x.r != y.r || x.x != y.x ||
            x.b_chg != y.b_chg || x.tap != y.tap || !near_ulp(x.shift, y.shift) ||
            x.in_service != y.in_service)
            return false;
    }
    for (std::size_t i = 0; i < a.gens.size(); ++i) {
        const Gen &x = a.gens[i], &y = b.gens[i];
        if (x.bus != y.bus || !near_ulp(x.pg, y.pg) || !near_ulp(x.qg, y.qg) ||
            x.vset != y.vset)
            return false;
    }
    return true;
}

}  // namespace gridse
