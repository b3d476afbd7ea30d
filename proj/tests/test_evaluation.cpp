#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"

#include "gridse/casegen.hpp"
#include "gridse/evaluation.hpp"
#include "gridse/rng.hpp"
#include "gridse/synth.hpp"
#include "gridse/types.hpp"

#include "helpers.hpp"

using namespace gridse;

TEST_CASE("error metrics reduce simple examples") {
    Vec er(1), ei(1), tr(1), ti(1);
    er << 1.01;
    ei << -0.02;
    tr << 1.0;
    ti << 0.0;
    CHECK(sigma_ss(er, ei, tr, ti) == doctest::Approx(5e-4).epsilon(1e-12));
    CHECK(sigma_max(er, ei, tr, ti) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(sigma_ss(tr, ti, tr, ti) == 0.0);
    CHECK(sigma_max(tr, ti, tr, ti) == 0.0);
    Vec empty;
    CHECK(sigma_ss(empty, empty, empty, empty) == 0.0);
    CHECK(sigma_max(empty, empty, empty, empty) == 0.0);
}

TEST_CASE("error metrics agree with a complex recomputation") {
    rng::Stream s(5, 0, rng::channel_id(rng::Domain::misc, 50));
    int n = 40;
    Vec er(n), ei(n), tr(n), ti(n);
    for (int i = 0; i < n; ++i) {
        tr(i) = 0.9 + 0.2 * s.uniform01();
        ti(i) = -0.1 + 0.2 * s.uniform01();
        er(i) = tr(i) + 0.01 * s.normal();
        ei(i) = ti(i) + 0.01 * s.normal();
    }
    double ss = 0.0, worst = 0.0;
    for (int i = 0; i < n; ++i) {
        std::complex<double> d(er(i) - tr(i), ei(i) - ti(i));
        ss += std::norm(d);
        worst = std::max({worst, std::abs(d.real()), std::abs(d.imag())});
    }
    CHECK(sigma_ss(er, ei, tr, ti) == doctest::Approx(ss).epsilon(1e-12));
    CHECK(sigma_max(er, ei, tr, ti) == doctest::Approx(worst).epsilon(1e-12));
    CHECK(sigma_max(er, ei, tr, ti) * sigma_max(er, ei, tr, ti) <= sigma_ss(er, ei, tr, ti));

    // Bus order carries no information for either metric.
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng::shuffle(perm, s);
    Vec er2(n), ei2(n), tr2(n), ti2(n);
    for (int i = 0; i < n; ++i) {
        int j = perm[static_cast<std::size_t>(i)];
        er2(i) = er(j);
        ei2(i) = ei(j);
        tr2(i) = tr(j);
        ti2(i) = ti(j);
    }
    CHECK(sigma_ss(er2, ei2, tr2, ti2) == doctest::Approx(sigma_ss(er, ei, tr, ti)));
    CHECK(sigma_max(er2, ei2, tr2, ti2) == sigma_max(er, ei, tr, ti));
}

TEST_CASE("error metrics reject mismatched lengths") {
    Vec a = Vec::Zero(3), b = Vec::Zero(2);
    CHECK_THROWS_AS(sigma_ss(a, a, a, b), LengthMismatch);
    CHECK_THROWS_AS(sigma_max(b, a, a, a), LengthMismatch);
}

TEST_CASE("confidence quantiles match the normal distribution") {
    CHECK(ci_z_value(0.99) == 2.5758293);  // the protocol's pinned value
    CHECK(ci_z_value(0.95) == doctest::Approx(1.9599640).epsilon(1e-5));
    CHECK(ci_z_value(0.999) == doctest::Approx(3.2905267).epsilon(1e-5));
    CHECK(ci_z_value(0.5) == doctest::Approx(0.6744898).epsilon(1e-5));
    CHECK_THROWS_AS(ci_z_value(0.0), ValidationError);
    CHECK_THROWS_AS(ci_z_value(1.0), ValidationError);
    CHECK_THROWS_AS(ci_z_value(-0.5), ValidationError);
}

TEST_CASE("accumulator options are validated") {
    CiOptions opt;
    CHECK_NOTHROW(CiAccumulator{opt});
    SUBCASE("non-positive relative target") {
        opt.rel = 0.0;
        CHECK_THROWS_AS(CiAccumulator{opt}, ValidationError);
    }
    SUBCASE("too few minimum trials") {
        opt.min_trials = 1;
        CHECK_THROWS_AS(CiAccumulator{opt}, ValidationError);
    }
    SUBCASE("max below min") {
        opt.max_trials = 10;
        opt.min_trials = 20;
        CHECK_THROWS_AS(CiAccumulator{opt}, ValidationError);
    }
    SUBCASE("level outside the unit interval") {
        opt.level = 1.5;
        CHECK_THROWS_AS(CiAccumulator{opt}, ValidationError);
    }
}

TEST_CASE("a constant stream stops at the minimum trial count") {
    CiOptions opt;
    opt.min_trials = 12;
    TrialStats st = ci_stopping([] { return 3.7; }, opt);
    CHECK(st.trials == 12);
    CHECK(st.stopped_by == StopReason::ci);
    CHECK(st.mean == doctest::Approx(3.7));
    CHECK(st.ci_half_width <= 1e-15);
    CHECK_FALSE(st.degenerate_mean);
    CHECK(st.values.size() == 12);
}

TEST_CASE("a clear mean stops near the theoretical trial count") {
    // With mean 1 and sigma 0.1 the half-width target 0.05 * mean needs about
    // (z * sigma / 0.05)^2 = 27 trials; the median over repetitions must land
    // within a factor of two.
    CiOptions opt;
    opt.min_trials = 5;
    opt.max_trials = 1000;
    std::vector<std::int64_t> stops;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        rng::Stream s(rep, 0, rng::channel_id(rng::Domain::misc, 51));
        TrialStats st = ci_stopping([&] { return 1.0 + 0.1 * s.normal(); }, opt);
        CHECK(st.stopped_by == StopReason::ci);
        CHECK(st.ci_half_width < opt.rel * std::abs(st.mean));
        stops.push_back(st.trials);
    }
    std::sort(stops.begin(), stops.end());
    std::int64_t median = stops[stops.size() / 2];
    CHECK(median >= 13);
    CHECK(median <= 54);
}

TEST_CASE("a zero-mean stream runs out and is flagged") {
    CiOptions opt;
    opt.max_trials = 200;
    rng::Stream s(3, 0, rng::channel_id(rng::Domain::misc, 52));
    TrialStats st = ci_stopping([&] { return s.normal(); }, opt);
    CHECK(st.trials == 200);
    CHECK(st.stopped_by == StopReason::max_trials);
    CHECK(st.degenerate_mean);
}

TEST_CASE("an unmet target with a clear mean is not flagged") {
    CiOptions opt;
    opt.max_trials = 50;
    rng::Stream s(4, 0, rng::channel_id(rng::Domain::misc, 53));
    TrialStats st = ci_stopping([&] { return 1.0 + s.normal(); }, opt);
    CHECK(st.trials == 50);
    CHECK(st.stopped_by == StopReason::max_trials);
    CHECK_FALSE(st.degenerate_mean);
    CHECK(st.ci_half_width >= opt.rel * std::abs(st.mean));
}

TEST_CASE("reported moments match the stored values") {
    CiOptions opt;
    opt.min_trials = 20;
    rng::Stream s(6, 0, rng::channel_id(rng::Domain::misc, 54));
    TrialStats st = ci_stopping([&] { return 2.0 + 0.3 * s.normal(); }, opt);
    REQUIRE(!st.values.empty());
    double mean = 0.0;
    for (double v : st.values) mean += v;
    mean /= static_cast<double>(st.values.size());
    CHECK(st.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(static_cast<std::size_t>(st.trials) == st.values.size());
}

TEST_CASE("trial runs are deterministic") {
    SynthOptions grid;
    grid.buses = 30;
    grid.seed = 17;
    GridCase c = make_synthetic_grid(grid);
    NoiseSpec spec;
    TrialConfig cfg;
    cfg.ci.min_trials = 10;
    cfg.ci.max_trials = 40;
    cfg.seed = 5;
    TrialStats a = run_trials(c, spec, cfg);
    TrialStats b = run_trials(c, spec, cfg);
    CHECK(a.trials == b.trials);
    CHECK(a.mean == b.mean);
    CHECK(a.values == b.values);
    CHECK(a.failed_trials == 0);
}

TEST_CASE("a batched trial run reproduces the sequential one") {
    SynthOptions grid;
    grid.buses = 30;
    grid.seed = 18;
    GridCase c = make_synthetic_grid(grid);
    NoiseSpec spec;
    TrialConfig cfg;
    cfg.ci.min_trials = 10;
    cfg.ci.max_trials = 40;
    cfg.seed = 6;
    cfg.threads = 1;
    TrialStats a = run_trials(c, spec, cfg);
    cfg.threads = 3;
    TrialStats b = run_trials(c, spec, cfg);
    CHECK(a.trials == b.trials);
    CHECK(a.mean == b.mean);
    CHECK(a.values == b.values);
}

TEST_CASE("noise-free trials collapse to an immediate stop") {
    SynthOptions grid;
    grid.buses = 25;
    grid.seed = 19;
    GridCase c = make_synthetic_grid(grid);
    NoiseSpec spec;
    spec.pmu_sigma_rel = 0.0;
    spec.rtu_sigma_vm_rel = 0.0;
    spec.rtu_sigma_pq_rel = 0.0;
    TrialConfig cfg;
    cfg.ci.min_trials = 8;
    TrialStats st = run_trials(c, spec, cfg);
    CHECK(st.trials == 8);
    CHECK(st.stopped_by == StopReason::ci);
    CHECK(st.mean < 1e-16);  // exact reconstruction every trial
}

TEST_CASE("honest weighting beats ignoring degraded devices") {
    SynthOptions grid;
    grid.buses = 80;
    grid.seed = 21;
    GridCase c = make_synthetic_grid(grid);
    NoiseSpec spec;
    spec.degraded_frac = 0.3;
    TrialConfig cfg;
    cfg.ci.min_trials = 30;
    cfg.ci.max_trials = 120;
    cfg.seed = 7;
    cfg.weighted = true;
    TrialStats weighted = run_trials(c, spec, cfg);
    cfg.weighted = false;
    TrialStats unweighted = run_trials(c, spec, cfg);
    CHECK(weighted.mean > 0.0);
    CHECK(weighted.mean < unweighted.mean);
    // The intervals separate entirely on this case, not just the means.
    CHECK(weighted.mean + weighted.ci_half_width <
          unweighted.mean - unweighted.ci_half_width);
}

TEST_CASE("both estimator models land in the same error regime") {
    SynthOptions grid;
    grid.buses = 30;
    grid.seed = 21;
    GridCase c = make_synthetic_grid(grid);
    NoiseSpec spec;
    TrialConfig cfg;
    cfg.ci.min_trials = 15;
    cfg.ci.max_trials = 60;
    cfg.ci.rel = 0.2;
    cfg.seed = 8;
    cfg.model = SeModel::delta_i;
    TrialStats di = run_trials(c, spec, cfg);
    cfg.model = SeModel::delta_y;
    TrialStats dy = run_trials(c, spec, cfg);
    REQUIRE(di.mean > 0.0);
    REQUIRE(dy.mean > 0.0);
    double ratio = dy.mean / di.mean;
    CHECK(ratio > 0.2);
    CHECK(ratio < 5.0);
}

TEST_CASE("trial configuration is validated") {
    SynthOptions grid;
    grid.buses = 10;
    GridCase c = make_synthetic_grid(grid);
    NoiseSpec spec;
    TrialConfig cfg;
    cfg.threads = 0;
    CHECK_THROWS_AS(run_trials(c, spec, cfg), ValidationError);
}
