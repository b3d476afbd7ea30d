#include "gridse/evaluation.hpp"

#include <cmath>
#include <thread>

#include "gridse/network.hpp"
#include "gridse/nonlinear_se.hpp"
#include "gridse/rng.hpp"

namespace gridse {

namespace {

void check_lengths(const Vec& a, const Vec& b, const Vec& c, const Vec& d) {
    if (a.size() != b.size() || a.size() != c.size() || a.size() != d.size())
        throw LengthMismatch("estimate and truth vectors must share one length");
}

/// Mean is statistically indistinguishable from zero at stopping; the
/// relative criterion carries no information there.
bool mean_degenerate(double mean, double half_width) {
    return std::abs(mean) <= std::max(half_width, 1e-15);
}

}  // namespace

double sigma_ss(const Vec& est_vr, const Vec& est_vi, const Vec& tr_vr, const Vec& tr_vi) {
    check_lengths(est_vr, est_vi, tr_vr, tr_vi);
    return (est_vr - tr_vr).squaredNorm() + (est_vi - tr_vi).squaredNorm();
}

double sigma_max(const Vec& est_vr, const Vec& est_vi, const Vec& tr_vr, const Vec& tr_vi) {
    check_lengths(est_vr, est_vi, tr_vr, tr_vi);
    if (est_vr.size() == 0) return 0.0;
    return std::max((est_vr - tr_vr).cwiseAbs().maxCoeff(),
                    (est_vi - tr_vi).cwiseAbs().maxCoeff());
}

double ci_z_value(double level) {
    if (!(level > 0.0 && level < 1.0))
        throw ValidationError("confidence level must lie in (0, 1)");
    if (level == 0.99) return 2.5758293;  // the protocol's pinned two-sided 99% quantile

    // Two-sided quantile: Phi^-1(1 - (1-level)/2) via Newton on erfc, started
    // from a crude expansion; converges in a handful of steps anywhere sane.
    double tail = (1.0 - level) / 2.0;
    double z = std::sqrt(-2.0 * std::log(2.0 * tail));  // rough upper-tail start
    for (int i = 0; i < 60; ++i) {
        double f = 0.5 * std::erfc(z / std::sqrt(2.0)) - tail;
        double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
        double step = f / pdf;
        z += step;
        if (std::abs(step) < 1e-12 * std::max(1.0, std::abs(z))) break;
    }
    return z;
}

CiAccumulator::CiAccumulator(CiOptions opt) : opt_(opt) {
    if (!(opt_.rel > 0.0)) throw ValidationError("relative half-width target must be positive");
    if (opt_.min_trials < 2) throw ValidationError("min_trials must be at least 2");
    if (opt_.max_trials < opt_.min_trials)
        throw ValidationError("max_trials must be at least min_trials");
    ci_z_value(opt_.level);  // validates the level eagerly
}

void CiAccumulator::add(double value) {
    values_.push_back(value);
    double delta = value - mean_;
    mean_ += delta / static_cast<double>(values_.size());
    m2_ += delta * (value - mean_);
}

bool CiAccumulator::should_stop() const {
    auto n = static_cast<std::int64_t>(values_.size());
    if (n < opt_.min_trials) return false;
    double var = m2_ / static_cast<double>(n - 1);
    double hw = ci_z_value(opt_.level) * std::sqrt(std::max(var, 0.0)) /
                std::sqrt(static_cast<double>(n));
    // A numerically constant stream stops immediately; otherwise the relative
    // target must be met by a mean distinguishable from zero.
    if (hw <= 1e-15) return true;
    return std::abs(mean_) > 1e-15 && hw < opt_.rel * std::abs(mean_);
}

TrialStats CiAccumulator::finish() const {
    TrialStats st;
    st.values = values_;
    st.trials = count();
    st.mean = mean_;
    if (st.trials > 1) {
        double var = m2_ / static_cast<double>(st.trials - 1);
        st.ci_half_width = ci_z_value(opt_.level) * std::sqrt(std::max(var, 0.0)) /
                           std::sqrt(static_cast<double>(st.trials));
    }
    st.stopped_by = should_stop() ? StopReason::ci : StopReason::max_trials;
    st.degenerate_mean =
        st.stopped_by == StopReason::max_trials && mean_degenerate(st.mean, st.ci_half_width);
    return st;
}

TrialStats ci_stopping(const std::function<double()>& next, const CiOptions& opt) {
    CiAccumulator acc(opt);
    while (acc.count() < opt.max_trials) {
        acc.add(next());
        if (acc.should_stop()) break;
    }
    return acc.finish();
}

TrialStats run_trials(const GridCase& c, const NoiseSpec& spec, const TrialConfig& cfg) {
    validate(c);
    validate(spec);
    if (cfg.threads < 1) throw ValidationError("threads must be at least 1");

    PfSolution pf = solve_power_flow(c);
    std::vector<DeviceKind> assignment = assign_devices(c, spec, cfg.seed);
    NoiseSpec applied = spec;
    if (!cfg.weighted) applied.degraded_weight_div = 1.0;  // same gamma for degraded RTUs
    SplitAdmittance adm = build_split_admittance(c);

    // One trial = regenerate noise, estimate, score. Pure in its index, so
    // trials can be computed speculatively and consumed in index order.
    auto score_trial = [&](std::int64_t t, double& value) {
        std::uint64_t noise_seed = rng::derive_seed(
            cfg.seed, rng::channel_id(rng::Domain::trial, static_cast<std::uint64_t>(t)));
        SeCase se = generate_se_case(pf, c, applied, assignment, noise_seed);
        try {
            EstimateResult est = cfg.model == SeModel::delta_i
                                     ? solve_linear_se(se, adm)
                                     : solve_nonlinear_se(se, adm);
            value = cfg.measure == Measure::ss
                        ? sigma_ss(est.vr, est.vi, pf.vr, pf.vi)
                        : sigma_max(est.vr, est.vi, pf.vr, pf.vi);
            return true;
        } catch (const SingularSystem&) {
            return false;
        } catch (const NotConverged&) {
            return false;
        }
    };

    CiAccumulator acc(cfg.ci);
    std::int64_t failed = 0;
    std::int64_t t = 0;
    bool stop = false;
    while (!stop && t < cfg.ci.max_trials) {
        auto batch = static_cast<std::int64_t>(
            std::min<std::int64_t>(cfg.threads, cfg.ci.max_trials - t));
        std::vector<double> values(static_cast<std::size_t>(batch));
        std::vector<char> ok(static_cast<std::size_t>(batch));
        if (batch == 1) {
            ok[0] = score_trial(t, values[0]) ? 1 : 0;
        } else {
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(batch));
            for (std::int64_t b = 0; b < batch; ++b)
                pool.emplace_back([&, b] {
                    ok[static_cast<std::size_t>(b)] =
                        score_trial(t + b, values[static_cast<std::size_t>(b)]) ? 1 : 0;
                });
            for (std::thread& th : pool) th.join();
        }
        for (std::int64_t b = 0; b < batch && !stop; ++b) {
            ++t;
            if (!ok[static_cast<std::size_t>(b)]) {
                ++failed;
                continue;
            }
            acc.add(values[static_cast<std::size_t>(b)]);
            stop = acc.should_stop();
        }
    }
    TrialStats st = acc.finish();
    st.failed_trials = failed;
    return st;
}

}  // namespace gridse
