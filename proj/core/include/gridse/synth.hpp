#pragma once

#include "gridse/types.hpp"

namespace gridse {

/// Knobs for the synthetic-case builder. Defaults give a lossy distribution-
/// style grid (r about a quarter of x) whose flat-start power flow converges
/// in a handful of iterations at any size we use.
struct SynthOptions {
    int buses = 120;
    std::uint64_t seed = 1;
    /// Fraction of non-slack buses holding a generator (PV).
    double pv_frac = 0.08;
    /// Extra cross ties on top of the connecting ring, as a fraction of buses.
    double chord_frac = 0.35;
    /// Fraction of branches built as off-nominal-tap transformers.
    double xfmr_frac = 0.12;
    /// Mean load per PQ bus in per-unit; individual draws vary around it.
    double load_scale = 0.02;
};

/// Build a connected ring-plus-chords grid: bus 1 slack, a deterministic
/// pseudo-random sprinkling of PV buses and transformers, every PQ bus
/// lightly loaded. Same options produce the identical case on every run.
GridCase make_synthetic_grid(const SynthOptions& opt);

}  // namespace gridse
