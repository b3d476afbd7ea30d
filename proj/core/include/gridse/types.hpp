#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "gridse/errors.hpp"

namespace gridse {

enum class BusKind { slack, pv, pq };

/// One network node. Loads, shunts and voltage starts are per-unit; va_init in radians.
struct Bus {
    int id = 0;
    BusKind kind = BusKind::pq;
    double pd = 0.0;
    double qd = 0.0;
    double gs = 0.0;
    double bs = 0.0;
    double vm_init = 1.0;
    double va_init = 0.0;
};

/// Pi-model branch. tap = 1 means no off-nominal ratio; shift in radians.
struct Branch {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b_chg = 0.0;
    double tap = 1.0;
    double shift = 0.0;
    bool in_service = true;
};

struct Gen {
    int bus = 0;
    double pg = 0.0;
    double qg = 0.0;
    double vset = 1.0;
};

/// A parsed grid case: the known network topology plus power-flow models.
struct GridCase {
    std::string name = "case";
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Gen> gens;

    int size() const { return static_cast<int>(buses.size()); }
};

/// Map from file bus id to dense index (position of the bus row in the case).
using BusIndex = std::unordered_map<int, int>;

BusIndex make_bus_index(const GridCase& c);

/// Index of the slack bus; throws ValidationError unless exactly one exists.
int slack_index(const GridCase& c);

/// Throws ValidationError on any violated GridCase invariant.
void validate(const GridCase& c);

/// Field-exact equality with ordering significant. Quantities that pass
/// through a unit conversion at the file boundary (loads, shunts, injections
/// in MW on the MVA base; angles in degrees) tolerate a few rounding steps;
/// everything stored verbatim must match exactly.
bool structurally_equal(const GridCase& a, const GridCase& b);

}  // namespace gridse
