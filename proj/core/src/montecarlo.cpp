#include "gridse/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "gridse/rng.hpp"
#include "gridse/sparse_solver.hpp"

namespace gridse {

namespace {

/// Samples are partitioned into fixed chunks by index. Chunk boundaries (and
/// therefore every floating-point accumulation order) depend only on the
/// sample count, never on the thread count.
constexpr std::int64_t kChunkSize = 64;

/// Columns of the per-sample value matrix.
enum Channel { kVm = 0, kVa = 1, kVr = 2, kVi = 3 };

/// Single-pass mean/variance state for all buses and channels of one chunk,
/// merged across chunks in index order.
struct Moments {
    std::int64_t count = 0;
    Eigen::MatrixXd mean;
    Eigen::MatrixXd m2;

    void init(int n) {
        mean = Eigen::MatrixXd::Zero(n, 4);
        m2 = Eigen::MatrixXd::Zero(n, 4);
    }
    void push(const Eigen::MatrixXd& v) {
        ++count;
        Eigen::MatrixXd delta = v - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta.cwiseProduct(v - mean);
    }
    void merge(const Moments& other) {
        if (other.count == 0) return;
        if (count == 0) {
            *this = other;
            return;
        }
        double na = static_cast<double>(count), nb = static_cast<double>(other.count);
        double tot = na + nb;
        Eigen::MatrixXd delta = other.mean - mean;
        mean += delta * (nb / tot);
        m2 += other.m2 + delta.cwiseProduct(delta) * (na * nb / tot);
        count += other.count;
    }
};

/// Quantities whose accumulation is exact and order-free: extrema, histogram
/// counts, failed-sample indices. Kept per worker and merged at the end.
struct Exact {
    Eigen::MatrixXd min, max;
    std::vector<std::uint64_t> vm_counts, va_counts;  // n * bins each
    std::vector<std::int64_t> failed;

    void init(int n, int bins) {
        min = Eigen::MatrixXd::Constant(n, 4, std::numeric_limits<double>::infinity());
        max = Eigen::MatrixXd::Constant(n, 4, -std::numeric_limits<double>::infinity());
        vm_counts.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(bins), 0);
        va_counts.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(bins), 0);
    }
    void merge(const Exact& other) {
        min = min.cwiseMin(other.min);
        max = max.cwiseMax(other.max);
        for (std::size_t i = 0; i < vm_counts.size(); ++i) vm_counts[i] += other.vm_counts[i];
        for (std::size_t i = 0; i < va_counts.size(); ++i) va_counts[i] += other.va_counts[i];
        failed.insert(failed.end(), other.failed.begin(), other.failed.end());
    }
};

/// Fixed per-bus bin ranges, decided once after the pilot pass.
struct Edges {
    Vec vm_lo, vm_width, va_lo, va_width;  // width = full range / bins
};

int bin_of(double v, double lo, double width, int bins) {
    auto b = static_cast<int>(std::floor((v - lo) / width));
    return std::clamp(b, 0, bins - 1);
}

/// Everything one worker needs to score samples; reuses the KKT pattern and
/// the symbolic factorization across samples.
struct SampleSolver {
    const SeCase* base;
    const McConfig* cfg;
    const SplitAdmittance* adm0;
    SeCase work;
    KktAssembler kkt;
    SparseLuSolver lu;

    SampleSolver(const SeCase& se, const McConfig& c, const SplitAdmittance& adm)
        : base(&se), cfg(&c), adm0(&adm), work(se), kkt(se, adm) {
        lu.analyze(kkt.matrix());
    }

    /// Returns false when the sample's KKT system cannot be solved.
    bool score(std::int64_t k, Eigen::MatrixXd& out) {
        SampleDraw draw = draw_sample(*base, *cfg, k);
        work.devices = std::move(draw.devices);
        if (draw.branches) {
            SplitAdmittance adm_k = build_split_admittance(work.grid, &*draw.branches);
            kkt.refresh(work, adm_k);
        } else {
            kkt.refresh(work, *adm0);
        }
        Vec z;
        try {
            lu.factorize(kkt.matrix());
            z = lu.solve(kkt.rhs());
        } catch (const SingularSystem&) {
            return false;
        }
        if (!z.allFinite()) return false;
        const int n = kkt.n();
        for (int i = 0; i < n; ++i) {
            double vr = z[i], vi = z[n + i];
            out(i, kVm) = std::hypot(vr, vi);
            out(i, kVa) = std::atan2(vi, vr);
            out(i, kVr) = vr;
            out(i, kVi) = vi;
        }
        return true;
    }
};

int resolve_threads(const McConfig& cfg) {
    int t = cfg.threads > 0 ? cfg.threads : physical_core_count();
    return std::max(t, 1);
}

/// Runs samples [0, limit) over the chunk grid. hist_edges == nullptr selects
/// the pilot flavor (moments only).
void run_pass(const SeCase& se, const McConfig& cfg, const SplitAdmittance& adm0,
              std::int64_t limit, const Edges* hist_edges, Moments& moments_out,
              Exact* exact_out) {
    const int n = se.grid.size();
    const int bins = cfg.histogram_bins;
    const std::int64_t num_chunks = (limit + kChunkSize - 1) / kChunkSize;
    const int threads = std::min<std::int64_t>(resolve_threads(cfg),
                                               std::max<std::int64_t>(num_chunks, 1));

    std::vector<Moments> chunk_moments(static_cast<std::size_t>(num_chunks));
    std::vector<Exact> worker_exact(static_cast<std::size_t>(threads));
    std::atomic<std::int64_t> next{0};
    std::vector<std::string> errors(static_cast<std::size_t>(threads));

    auto worker = [&](int w) {
        try {
            SampleSolver solver(se, cfg, adm0);
            Exact& exact = worker_exact[static_cast<std::size_t>(w)];
            if (exact_out) exact.init(n, bins);
            Eigen::MatrixXd vals(n, 4);
            for (;;) {
                std::int64_t c = next.fetch_add(1);
                if (c >= num_chunks) break;
                Moments& mom = chunk_moments[static_cast<std::size_t>(c)];
                mom.init(n);
                std::int64_t lo = c * kChunkSize;
                std::int64_t hi = std::min(lo + kChunkSize, limit);
                for (std::int64_t k = lo; k < hi; ++k) {
                    if (!solver.score(k, vals)) {
                        if (exact_out) exact.failed.push_back(k);
                        continue;
                    }
                    mom.push(vals);
                    if (!exact_out) continue;
                    exact.min = exact.min.cwiseMin(vals);
                    exact.max = exact.max.cwiseMax(vals);
                    for (int i = 0; i < n; ++i) {
                        auto row = static_cast<std::size_t>(i) * static_cast<std::size_t>(bins);
                        ++exact.vm_counts[row + static_cast<std::size_t>(bin_of(
                                                    vals(i, kVm), hist_edges->vm_lo[i],
                                                    hist_edges->vm_width[i], bins))];
                        ++exact.va_counts[row + static_cast<std::size_t>(bin_of(
                                                    vals(i, kVa), hist_edges->va_lo[i],
                                                    hist_edges->va_width[i], bins))];
                    }
                }
            }
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(w)] = e.what();
        }
    };

    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
        for (std::thread& t : pool) t.join();
    }
    for (const std::string& e : errors)
        if (!e.empty()) throw Error("Monte Carlo worker failed: " + e);

    moments_out.init(n);
    for (const Moments& m : chunk_moments) moments_out.merge(m);
    if (exact_out) {
        exact_out->init(n, bins);
        for (const Exact& e : worker_exact) exact_out->merge(e);
        std::sort(exact_out->failed.begin(), exact_out->failed.end());
    }
}

}  // namespace

void validate(const McConfig& cfg) {
    if (cfg.samples < 1) throw ValidationError("samples must be positive");
    if (cfg.histogram_bins < 2) throw ValidationError("need at least 2 histogram bins");
    if (cfg.pilot_samples < 1 || cfg.pilot_samples > cfg.samples)
        throw ValidationError("pilot_samples must lie in [1, samples]");
    if (cfg.threads < 0) throw ValidationError("threads must be nonnegative");
    if (cfg.net_uncertainty) validate(*cfg.net_uncertainty);
}

SampleDraw draw_sample(const SeCase& se, const McConfig& cfg, std::int64_t k) {
    SampleDraw out;
    out.devices = se.devices;
    auto sample = static_cast<std::uint64_t>(k);
    for (std::size_t i = 0; i < out.devices.size(); ++i) {
        Device& d = out.devices[i];
        auto draw = [&](std::uint64_t channel, double mean, double rel) {
            rng::Stream s(cfg.seed, sample,
                          rng::channel_id(rng::Domain::mc_meas, i, channel));
            return s.normal(mean, effective_sigma(mean, rel));
        };
        if (d.is_pmu()) {
            PmuDevice& p = d.pmu();
            if (p.perfect) continue;
            p.vr = draw(0, p.vr, p.sigma_rel);
            p.vi = draw(1, p.vi, p.sigma_rel);
            p.ir = draw(2, p.ir, p.sigma_rel);
            p.ii = draw(3, p.ii, p.sigma_rel);
        } else {
            RtuDevice& r = d.rtu();
            r.vm = std::max(draw(0, r.vm, r.sigma_vm_rel), kVmFloor);
            r.p = draw(1, r.p, r.sigma_p_rel);
            r.q = draw(2, r.q, r.sigma_q_rel);
        }
    }
    if (cfg.net_uncertainty)
        out.branches = perturb_branches(se.grid, *cfg.net_uncertainty, cfg.seed, sample);
    return out;
}

McSummary run_mc(const SeCase& se, const McConfig& cfg) {
    validate(cfg);
    validate(se);
    const int n = se.grid.size();
    const int bins = cfg.histogram_bins;
    SplitAdmittance adm0 = build_split_admittance(se.grid);

    McSummary sum;
    sum.n = n;
    sum.samples_requested = cfg.samples;
    sum.baseline = solve_linear_se(se, adm0);

    // Pilot pass: fix per-bus histogram ranges at mean +/- 6 std so the main
    // pass can bin immediately with stable edges.
    Moments pilot;
    run_pass(se, cfg, adm0, cfg.pilot_samples, nullptr, pilot, nullptr);

    Edges edges;
    edges.vm_lo.resize(n);
    edges.vm_width.resize(n);
    edges.va_lo.resize(n);
    edges.va_width.resize(n);
    for (int i = 0; i < n; ++i) {
        auto range = [&](Channel ch, double fallback, Vec& lo_out, Vec& width_out) {
            double center, spread;
            if (pilot.count > 0) {
                center = pilot.mean(i, ch);
                double var = pilot.count > 1
                                 ? pilot.m2(i, ch) / static_cast<double>(pilot.count - 1)
                                 : 0.0;
                spread = 6.0 * std::sqrt(std::max(var, 0.0));
            } else {
                center = fallback;
                spread = 0.0;
            }
            if (!(spread > 0.0)) spread = std::max(1e-12, std::abs(center) * 1e-12);
            lo_out[i] = center - spread;
            width_out[i] = 2.0 * spread / bins;
        };
        double base_vm = std::hypot(sum.baseline.vr[i], sum.baseline.vi[i]);
        double base_va = std::atan2(sum.baseline.vi[i], sum.baseline.vr[i]);
        range(kVm, base_vm, edges.vm_lo, edges.vm_width);
        range(kVa, base_va, edges.va_lo, edges.va_width);
    }

    Moments moments;
    Exact exact;
    run_pass(se, cfg, adm0, cfg.samples, &edges, moments, &exact);

    sum.failed_samples = exact.failed;
    sum.samples_completed = cfg.samples - static_cast<std::int64_t>(exact.failed.size());
    if (static_cast<double>(exact.failed.size()) > 0.01 * static_cast<double>(cfg.samples))
        throw TooManyFailedSamples(std::to_string(exact.failed.size()) + " of " +
                                   std::to_string(cfg.samples) +
                                   " Monte Carlo samples failed to solve");

    auto stats_of = [&](Channel ch) {
        std::vector<ChannelStats> out(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            ChannelStats& s = out[static_cast<std::size_t>(i)];
            s.mean = moments.mean(i, ch);
            s.stddev = moments.count > 1
                           ? std::sqrt(std::max(
                                 moments.m2(i, ch) / static_cast<double>(moments.count - 1), 0.0))
                           : 0.0;
            s.min = exact.min(i, ch);
            s.max = exact.max(i, ch);
        }
        return out;
    };
    sum.vm = stats_of(kVm);
    sum.va = stats_of(kVa);
    sum.vr = stats_of(kVr);
    sum.vi = stats_of(kVi);

    auto hist_of = [&](const Vec& lo, const Vec& width,
                       const std::vector<std::uint64_t>& counts) {
        std::vector<Histogram> out(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            Histogram& h = out[static_cast<std::size_t>(i)];
            h.edges.resize(static_cast<std::size_t>(bins) + 1);
            for (int b = 0; b <= bins; ++b)
                h.edges[static_cast<std::size_t>(b)] = lo[i] + width[i] * b;
            auto row = static_cast<std::size_t>(i) * static_cast<std::size_t>(bins);
            h.counts.assign(counts.begin() + static_cast<std::ptrdiff_t>(row),
                            counts.begin() + static_cast<std::ptrdiff_t>(row + bins));
        }
        return out;
    };
    sum.vm_hist = hist_of(edges.vm_lo, edges.vm_width, exact.vm_counts);
    sum.va_hist = hist_of(edges.va_lo, edges.va_width, exact.va_counts);
    return sum;
}

}  // namespace gridse
