#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gridse/casegen.hpp"
#include "gridse/linalg.hpp"

namespace gridse {

/// Sum of squared errors over the stacked rectangular solution vector
/// [vr; vi]. Throws LengthMismatch.
double sigma_ss(const Vec& est_vr, const Vec& est_vi, const Vec& tr_vr, const Vec& tr_vi);

/// Max-abs error over the stacked rectangular solution vector.
double sigma_max(const Vec& est_vr, const Vec& est_vi, const Vec& tr_vr, const Vec& tr_vi);

struct CiOptions {
    double level = 0.99;
    double rel = 0.05;
    int min_trials = 30;
    std::int64_t max_trials = 1000;
};

enum class StopReason { ci, max_trials };

struct TrialStats {
    std::vector<double> values;
    double mean = 0.0;
    double ci_half_width = 0.0;
    std::int64_t trials = 0;
    StopReason stopped_by = StopReason::ci;
    bool degenerate_mean = false;
    std::int64_t failed_trials = 0;
};

/// two-sided normal quantile for the confidence level (2.5758293 at 99%).
double ci_z_value(double level);

/// Streaming stop rule: once n >= min_trials, stop when the half-width
/// z * s / sqrt(n) falls below rel * |mean| (a numerically constant stream
/// stops immediately), else run to max_trials. degenerate_mean flags a
/// max_trials stop whose mean is statistically indistinguishable from zero,
/// where the relative criterion is undefined.
class CiAccumulator {
public:
    explicit CiAccumulator(CiOptions opt);

    void add(double value);
    bool should_stop() const;
    TrialStats finish() const;
    std::int64_t count() const { return static_cast<std::int64_t>(values_.size()); }

private:
    CiOptions opt_;
    std::vector<double> values_;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Pulls values from the generator until the stop rule fires.
TrialStats ci_stopping(const std::function<double()>& next, const CiOptions& opt = {});

enum class SeModel { delta_i, delta_y };
enum class Measure { ss, max };

struct TrialConfig {
    SeModel model = SeModel::delta_i;
    Measure measure = Measure::ss;
    CiOptions ci;
    std::uint64_t seed = 0;
    int threads = 1;
    bool weighted = true;  // false neutralizes the degraded weight division
};

/// Multi-trial protocol: one power flow, one seeded device assignment, then
/// per-trial noise regeneration (seed derived from (cfg.seed, t)), estimation
/// and scoring against the embedded truth, fed to the stop rule in trial
/// order. Estimator failures are recorded and skipped.
TrialStats run_trials(const GridCase& c, const NoiseSpec& spec, const TrialConfig& cfg);

}  // namespace gridse
