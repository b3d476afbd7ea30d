#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gridse/linear_se.hpp"
#include "gridse/network.hpp"

namespace gridse {

struct McConfig {
    int samples = 10000;
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = physical core count
    std::optional<PerturbationSpec> net_uncertainty;
    int histogram_bins = 64;
    int pilot_samples = 500;
};

void validate(const McConfig& cfg);

/// Fixed-edge histogram; counts[i] covers [edges[i], edges[i+1]), with the
/// outermost bins absorbing out-of-range samples.
struct Histogram {
    std::vector<double> edges;           // bins + 1
    std::vector<std::uint64_t> counts;   // bins
};

struct ChannelStats {
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Per-bus streaming statistics of the sampled estimates plus the
/// deterministic baseline solution the samples scatter around.
struct McSummary {
    int n = 0;
    std::int64_t samples_requested = 0;
    std::int64_t samples_completed = 0;
    std::vector<std::int64_t> failed_samples;
    std::vector<ChannelStats> vm, va, vr, vi;
    std::vector<Histogram> vm_hist, va_hist;
    EstimateResult baseline;
};

/// One Monte Carlo draw: device means resampled around the case means
/// (perfect PMUs untouched, RTU admittances recomputed from the sampled
/// magnitude/powers), branch parameters redrawn iff net uncertainty is
/// configured. A pure function of (cfg.seed, k).
struct SampleDraw {
    std::vector<Device> devices;
    std::optional<PerturbedBranches> branches;
};

SampleDraw draw_sample(const SeCase& se, const McConfig& cfg, std::int64_t k);

/// Runs the full simple-random-sampling loop: pilot pass to fix histogram
/// edges (pilot mean +/- 6 pilot std per bus), then every sample scored
/// through the linear estimator on a deterministic worker pool. Output is
/// bit-identical for any thread count under a fixed seed. Samples whose KKT
/// system is singular are recorded in failed_samples and skipped; more than
/// 1% failures aborts with TooManyFailedSamples.
McSummary run_mc(const SeCase& se, const McConfig& cfg);

/// Number of physical cores (logical count when the topology is hidden).
int physical_core_count();

}  // namespace gridse
