#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gridse/linalg.hpp"
#include "gridse/types.hpp"

namespace gridse {

/// Split real/imaginary nodal admittance. `blocks` is the 2n x 2n real matrix
/// [[G, -B], [B, G]] for the complex bus admittance G + jB, with variables
/// ordered [all V_R; then all V_I] over the case's bus order; `ybus` is the
/// same admittance in complex form. The G and B blocks share one structural
/// pattern by construction.
struct SplitAdmittance {
    int n = 0;
    SpMat blocks;
    SpMatC ybus;
};

/// Relative standard deviations (fraction of mean) for series-element redraws.
struct PerturbationSpec {
    double sigma_line_r = 0.0;
    double sigma_line_x = 0.0;
    double sigma_xfmr_r = 0.0;
    double sigma_xfmr_x = 0.0;
};

void validate(const PerturbationSpec& spec);

/// Per-branch (r', x') draws, indexed like GridCase::branches.
struct PerturbedBranches {
    std::vector<double> r;
    std::vector<double> x;
};

/// Case files carry no transformer flag; classified by off-nominal tap or shift.
inline bool is_transformer(const Branch& b) { return b.tap != 1.0 || b.shift != 0.0; }

/// Standard pi-model stamping. When `overlay` is given its (r', x') values
/// replace the branch series impedances. Out-of-service branches are skipped.
/// Throws DegenerateBranch on r = x = 0.
SplitAdmittance build_split_admittance(const GridCase& c,
                                       const PerturbedBranches* overlay = nullptr);

/// Independent Normal redraw of every branch's series (r, x), line vs
/// transformer sigmas chosen by classification; r clamped below at 0.
/// A pure function of (c, spec, seed, sample).
PerturbedBranches perturb_branches(const GridCase& c, const PerturbationSpec& spec,
                                   std::uint64_t seed, std::uint64_t sample = 0);

}  // namespace gridse
