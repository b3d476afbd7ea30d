#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gridse/powerflow.hpp"
#include "gridse/types.hpp"

namespace gridse {

/// PMU measurement: complex bus voltage and net injection current means,
/// observed through a source conductance g_pmu. sigma_rel is the relative
/// standard deviation of each of the four channels (0 for perfect devices).
struct PmuDevice {
    double vr = 0.0;
    double vi = 0.0;
    double ir = 0.0;
    double ii = 0.0;
    double g_pmu = 10.0;
    double sigma_rel = 0.0;
    bool perfect = false;
};

/// RTU measurement: voltage magnitude and net consumed real/reactive power
/// (load positive), with per-channel relative sigmas and the objective weight.
struct RtuDevice {
    double vm = 1.0;
    double p = 0.0;
    double q = 0.0;
    double sigma_vm_rel = 0.0;
    double sigma_p_rel = 0.0;
    double sigma_q_rel = 0.0;
    double gamma = 1.0;
};

struct Device {
    int bus = 0;  // file bus id
    std::variant<PmuDevice, RtuDevice> model;

    bool is_pmu() const { return std::holds_alternative<PmuDevice>(model); }
    const PmuDevice& pmu() const { return std::get<PmuDevice>(model); }
    const RtuDevice& rtu() const { return std::get<RtuDevice>(model); }
    PmuDevice& pmu() { return std::get<PmuDevice>(model); }
    RtuDevice& rtu() { return std::get<RtuDevice>(model); }
};

struct TruthState {
    Vec vr;
    Vec vi;
};

/// A deterministic state-estimation case: grid plus exactly one measurement
/// device per bus (ordered like the buses), optional embedded ground truth,
/// and the seed the measurement errors were drawn with.
struct SeCase {
    std::string case_name;  // path of the originating grid case file
    GridCase grid;
    std::vector<Device> devices;
    std::optional<TruthState> truth;
    std::uint64_t seed = 0;
};

void validate(const SeCase& se);

/// Statistical inputs for synthetic case generation. Fractions and sigmas
/// default to the reference protocol: 4% perfect + 6% noisy PMUs with 0.02%
/// channel sigma and G_PMU = 10 p.u.; RTU sigmas 0.4% (vm) and 1% (p, q).
/// Degraded RTUs get sigma * degraded_sigma_mult and weight divided by
/// degraded_weight_div^weight_exponent.
struct NoiseSpec {
    double frac_pmu_perfect = 0.04;
    double frac_pmu_noisy = 0.06;
    double pmu_sigma_rel = 0.0002;
    double rtu_sigma_vm_rel = 0.004;
    double rtu_sigma_pq_rel = 0.01;
    double g_pmu = 10.0;
    double degraded_frac = 0.0;
    double degraded_sigma_mult = 10.0;
    double degraded_weight_div = 10.0;
    double weight_exponent = 1.0;
    double rtu_gamma = 1.0;
};

void validate(const NoiseSpec& spec);

enum class DeviceKind { pmu_perfect, pmu_noisy, rtu, rtu_degraded };

/// Seeded uniform assignment without replacement: floor(frac * n) buses per
/// PMU class, the rest RTU, a floor(degraded_frac * n_rtu) share of those
/// flagged degraded. Pure function of (c, spec, seed).
std::vector<DeviceKind> assign_devices(const GridCase& c, const NoiseSpec& spec,
                                       std::uint64_t seed);

/// Superimposes seeded measurement errors on the power-flow truth. The first
/// overload assigns devices with the same seed; the second takes a fixed
/// assignment so repeated noise draws share one device layout.
SeCase generate_se_case(const PfSolution& pf, const GridCase& c, const NoiseSpec& spec,
                        std::uint64_t seed);
SeCase generate_se_case(const PfSolution& pf, const GridCase& c, const NoiseSpec& spec,
                        const std::vector<DeviceKind>& assignment, std::uint64_t noise_seed,
                        std::string case_name = {});

/// Mean measurement admittance (g_m, b_m) = (p, q) / vm^2; either component
/// may be negative. Throws ZeroVoltage for vm <= 0.
std::pair<double, double> rtu_admittance(double vm, double p, double q);

/// Relative sigmas get this absolute floor so zero-injection channels keep a
/// well-defined sampling distribution.
inline constexpr double kSigmaFloor = 1e-6;

/// Absolute channel sigma for a relative spec: proportional to the mean
/// magnitude, floored at kSigmaFloor, exactly zero when the relative sigma is
/// zero. Case generation and Monte Carlo redraws share this rule.
inline double effective_sigma(double mean, double rel) {
    return rel == 0.0 ? 0.0 : std::max(rel * std::abs(mean), kSigmaFloor);
}

/// Sampled voltage magnitudes never go below this (6-sigma tail guard).
inline constexpr double kVmFloor = 0.1;

}  // namespace gridse
