// gridse: command-line front end for the state-estimation library.
//
// Subcommands cover the whole pipeline: synthesize or load a grid case,
// solve its power flow, superimpose seeded measurement noise, estimate the
// state with the current-mismatch or admittance-mismatch model, and evaluate
// through repeated trials or a Monte Carlo sweep. Every random draw flows
// from an explicit seed, so identical invocations produce byte-identical
// output files. Results go to -o (or stdout when omitted); logs go to stderr.
//
// Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O or input
// file error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gridse/case_io.hpp"
#include "gridse/casegen.hpp"
#include "gridse/errors.hpp"
#include "gridse/evaluation.hpp"
#include "gridse/linear_se.hpp"
#include "gridse/montecarlo.hpp"
#include "gridse/network.hpp"
#include "gridse/nonlinear_se.hpp"
#include "gridse/powerflow.hpp"
#include "gridse/rng.hpp"
#include "gridse/sparse_solver.hpp"
#include "gridse/synth.hpp"
#include "gridse/types.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel g_log_level = LogLevel::info;

void log_info(const std::string& msg) {
    if (g_log_level >= LogLevel::info) std::cerr << "gridse: " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (g_log_level >= LogLevel::debug) std::cerr << "gridse: " << msg << "\n";
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Results writer: stdout stays clean for piping when no -o is given.
void write_output(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw gridse::IoError("cannot open output file: " + path);
    out << text;
    out.flush();
    if (!out) throw gridse::IoError("write failed: " + path);
    log_info("wrote " + path);
}

// ---------------------------------------------------------------------------
// pf

struct PfArgs {
    std::string case_path;
    double tol = 1e-8;
    int max_iter = 50;
    std::string init = "flat";
    std::string output;
};

void run_pf(const PfArgs& a) {
    gridse::GridCase c = gridse::load_case(a.case_path);
    log_info("loaded " + c.name + ": " + std::to_string(c.size()) + " buses, " +
             std::to_string(c.branches.size()) + " branches");
    gridse::PfOptions opt;
    opt.tol = a.tol;
    opt.max_iter = a.max_iter;
    opt.init = a.init == "case" ? gridse::PfInit::from_case : gridse::PfInit::flat;
    gridse::PfSolution pf = gridse::solve_power_flow(c, opt);
    log_info("power flow converged in " + std::to_string(pf.iterations) +
             " iterations, residual " + fmt17(pf.max_mismatch));
    write_output(gridse::pf_result_to_json_string(pf.vr, pf.vi, pf.iterations), a.output);
}

// ---------------------------------------------------------------------------
// gen-grid

struct GenGridArgs {
    gridse::SynthOptions opt;
    std::string output;
};

void run_gen_grid(const GenGridArgs& a) {
    gridse::GridCase c = gridse::make_synthetic_grid(a.opt);
    log_info("synthesized " + c.name + ": " + std::to_string(c.size()) + " buses, " +
             std::to_string(c.branches.size()) + " branches, " +
             std::to_string(c.gens.size()) + " generators");
    write_output(gridse::serialize_case(c), a.output);
}

// ---------------------------------------------------------------------------
// gen-case

struct GenCaseArgs {
    std::string case_path;
    gridse::NoiseSpec spec;
    std::uint64_t seed = 1;
    double pf_tol = 1e-8;
    int pf_max_iter = 50;
    std::string output;
};

void run_gen_case(const GenCaseArgs& a) {
    gridse::GridCase c = gridse::load_case(a.case_path);
    gridse::PfOptions pf_opt;
    pf_opt.tol = a.pf_tol;
    pf_opt.max_iter = a.pf_max_iter;
    gridse::PfSolution pf = gridse::solve_power_flow(c, pf_opt);
    log_info("power flow converged in " + std::to_string(pf.iterations) + " iterations");
    gridse::SeCase se = gridse::generate_se_case(pf, c, a.spec, a.seed);
    se.case_name = a.case_path;  // keep the grid reachable from the JSON
    int pmus = 0;
    for (const auto& d : se.devices) pmus += d.is_pmu() ? 1 : 0;
    log_info("assigned " + std::to_string(pmus) + " PMUs and " +
             std::to_string(se.devices.size() - pmus) + " RTUs (seed " +
             std::to_string(a.seed) + ")");
    write_output(gridse::se_case_to_json_string(se), a.output);
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
    std::string se_path;
    std::string model = "delta-i";
    double tol = 1e-8;
    int max_iter = 50;
    double damping = 1.0;
    std::string init = "linear";
    std::string output;
};

void run_estimate(const EstimateArgs& a) {
    gridse::SeCase se = gridse::load_se_case(a.se_path);
    log_info("loaded measurement set for " + se.grid.name + " (" +
             std::to_string(se.devices.size()) + " devices)");
    gridse::EstimateResult r;
    if (a.model == "delta-i") {
        r = gridse::solve_linear_se(se);
    } else {
        gridse::NlOptions opt;
        opt.tol = a.tol;
        opt.max_iter = a.max_iter;
        opt.damping = a.damping;
        opt.init = a.init == "flat" ? gridse::NlInit::flat : gridse::NlInit::from_linear;
        r = gridse::solve_nonlinear_se(se, opt);
    }
    log_info("model " + a.model + ": objective " + fmt17(r.objective) + ", " +
             std::to_string(r.iterations) + " iterations");
    if (se.truth) {
        log_info("sigma_ss " + fmt17(gridse::sigma_ss(r.vr, r.vi, se.truth->vr, se.truth->vi)) +
                 ", sigma_max " +
                 fmt17(gridse::sigma_max(r.vr, r.vi, se.truth->vr, se.truth->vi)));
    }
    write_output(gridse::estimate_result_to_json_string(r, se), a.output);
}

// ---------------------------------------------------------------------------
// trials

struct TrialsArgs {
    std::string case_path;
    std::string model = "delta-i";
    std::string measure = "ss";
    gridse::CiOptions ci;
    std::uint64_t seed = 1;
    int threads = 1;
    bool weighted = true;
    gridse::NoiseSpec spec;
    std::string output;
};

void run_trials_cmd(const TrialsArgs& a) {
    gridse::GridCase c = gridse::load_case(a.case_path);
    gridse::TrialConfig cfg;
    cfg.model = a.model == "delta-i" ? gridse::SeModel::delta_i : gridse::SeModel::delta_y;
    cfg.measure = a.measure == "ss" ? gridse::Measure::ss : gridse::Measure::max;
    cfg.ci = a.ci;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    cfg.weighted = a.weighted;
    gridse::TrialStats st = gridse::run_trials(c, a.spec, cfg);
    log_info(std::to_string(st.trials) + " trials (" +
             (st.stopped_by == gridse::StopReason::ci ? "CI stop" : "max-trials stop") +
             "), mean " + fmt17(st.mean) + " +/- " + fmt17(st.ci_half_width));
    std::ostringstream csv;
    csv << "case,model,measure,weighted,trials,failed_trials,mean,ci_half_width,"
           "stopped_by,degenerate_mean\n";
    csv << c.name << ',' << a.model << ',' << "sigma_" << a.measure << ','
        << (a.weighted ? 1 : 0) << ',' << st.trials << ',' << st.failed_trials << ','
        << fmt17(st.mean) << ',' << fmt17(st.ci_half_width) << ','
        << (st.stopped_by == gridse::StopReason::ci ? "ci" : "max_trials") << ','
        << (st.degenerate_mean ? 1 : 0) << '\n';
    write_output(csv.str(), a.output);
}

// ---------------------------------------------------------------------------
// mc

struct McArgs {
    std::string se_path;
    gridse::McConfig cfg;
    std::string net_path;
    std::string hist_dir;
    std::string output;
};

void run_mc_cmd(const McArgs& a) {
    gridse::SeCase se = gridse::load_se_case(a.se_path);
    gridse::McConfig cfg = a.cfg;
    if (!a.net_path.empty()) cfg.net_uncertainty = gridse::load_perturbation_spec(a.net_path);
    gridse::McSummary s = gridse::run_mc(se, cfg);
    log_info(std::to_string(s.samples_completed) + "/" + std::to_string(s.samples_requested) +
             " samples solved, " + std::to_string(s.failed_samples.size()) + " failed");
    write_output(gridse::mc_summary_to_json_string(s, se), a.output);
    if (!a.hist_dir.empty()) {
        gridse::write_histogram_csvs(s, se, a.hist_dir);
        log_info("wrote histograms under " + a.hist_dir);
    }
}

// ---------------------------------------------------------------------------
// selftest

struct SelftestState {
    int passed = 0;
    std::vector<std::string> failures;
};

void run_check(SelftestState& st, const std::string& name, const std::function<void()>& body) {
    try {
        body();
        ++st.passed;
        std::cout << "ok   " << name << "\n";
    } catch (const std::exception& e) {
        st.failures.push_back(name + ": " + e.what());
        std::cout << "FAIL " << name << ": " << e.what() << "\n";
    }
}

void expect(bool cond, const std::string& what) {
    if (!cond) throw gridse::Error(what);
}

gridse::SeCase selftest_case(int buses, double noise_scale) {
    gridse::SynthOptions sopt;
    sopt.buses = buses;
    sopt.seed = 7;
    gridse::GridCase c = gridse::make_synthetic_grid(sopt);
    gridse::PfSolution pf = gridse::solve_power_flow(c);
    gridse::NoiseSpec spec;
    spec.pmu_sigma_rel *= noise_scale;
    spec.rtu_sigma_vm_rel *= noise_scale;
    spec.rtu_sigma_pq_rel *= noise_scale;
    return gridse::generate_se_case(pf, c, spec, 11);
}

int run_selftest() {
    SelftestState st;

    run_check(st, "seeded substreams reproduce and separate", [] {
        gridse::rng::Stream a(42, 3, gridse::rng::channel_id(gridse::rng::Domain::misc, 1));
        gridse::rng::Stream b(42, 3, gridse::rng::channel_id(gridse::rng::Domain::misc, 1));
        gridse::rng::Stream other(42, 3, gridse::rng::channel_id(gridse::rng::Domain::misc, 2));
        bool all_equal = true;
        bool any_differ = false;
        for (int i = 0; i < 16; ++i) {
            double u = a.uniform01();
            all_equal = all_equal && u == b.uniform01();
            any_differ = any_differ || u != other.uniform01();
        }
        expect(all_equal, "identical keys drifted apart");
        expect(any_differ, "distinct channels produced one stream");
    });

    run_check(st, "split admittance mirrors the complex bus matrix", [] {
        gridse::SynthOptions sopt;
        sopt.buses = 24;
        sopt.seed = 5;
        gridse::GridCase c = gridse::make_synthetic_grid(sopt);
        gridse::SplitAdmittance adm = gridse::build_split_admittance(c);
        int n = adm.n;
        Eigen::MatrixXd blocks(adm.blocks);
        Eigen::MatrixXcd ybus(adm.ybus);
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double g = ybus(i, j).real();
                double b = ybus(i, j).imag();
                worst = std::max(worst, std::abs(blocks(i, j) - g));
                worst = std::max(worst, std::abs(blocks(i, n + j) + b));
                worst = std::max(worst, std::abs(blocks(n + i, j) - b));
                worst = std::max(worst, std::abs(blocks(n + i, n + j) - g));
            }
        }
        expect(worst < 1e-13, "block mismatch " + fmt17(worst));
    });

    run_check(st, "power flow meets its residual certificate", [] {
        gridse::SynthOptions sopt;
        sopt.buses = 30;
        sopt.seed = 3;
        gridse::GridCase c = gridse::make_synthetic_grid(sopt);
        gridse::PfSolution pf = gridse::solve_power_flow(c);
        expect(pf.max_mismatch <= 1e-8, "certificate " + fmt17(pf.max_mismatch));
        double again = gridse::pf_residual(c, pf.vr, pf.vi, pf.p_net, pf.q_net);
        expect(again <= 1e-8, "recomputed residual " + fmt17(again));
    });

    run_check(st, "zero-noise estimators recover the power-flow state", [] {
        gridse::SeCase se = selftest_case(30, 0.0);
        const gridse::TruthState& tr = *se.truth;
        gridse::EstimateResult lin = gridse::solve_linear_se(se);
        expect(gridse::sigma_max(lin.vr, lin.vi, tr.vr, tr.vi) < 1e-8,
               "linear estimate off truth");
        gridse::EstimateResult nl = gridse::solve_nonlinear_se(se);
        expect(nl.iterations <= 2, "nonlinear took " + std::to_string(nl.iterations) +
                                       " iterations on exact data");
        expect(gridse::sigma_max(nl.vr, nl.vi, tr.vr, tr.vi) < 1e-8,
               "nonlinear estimate off truth");
    });

    run_check(st, "sparse KKT solve matches a dense factorization", [] {
        gridse::SeCase se = selftest_case(24, 1.0);
        gridse::SplitAdmittance adm = gridse::build_split_admittance(se.grid);
        gridse::KktSystem kkt = gridse::assemble_kkt(se, adm);
        gridse::Vec sparse = gridse::solve_sparse_linear(kkt.matrix, kkt.rhs);
        Eigen::MatrixXd dense(kkt.matrix);
        gridse::Vec direct = dense.fullPivLu().solve(kkt.rhs);
        double diff = (sparse - direct).cwiseAbs().maxCoeff();
        expect(diff < 1e-8, "solutions differ by " + fmt17(diff));
    });

    run_check(st, "CI stopping halts a constant stream at min_trials", [] {
        gridse::CiOptions opt;
        gridse::TrialStats ts = gridse::ci_stopping([] { return 2.5; }, opt);
        expect(ts.trials == opt.min_trials, "stopped at " + std::to_string(ts.trials));
        expect(ts.ci_half_width == 0.0, "nonzero half-width on constant data");
        expect(ts.stopped_by == gridse::StopReason::ci, "wrong stop reason");
    });

    run_check(st, "Monte Carlo summary is thread-count invariant", [] {
        gridse::SeCase se = selftest_case(16, 1.0);
        gridse::McConfig cfg;
        cfg.samples = 192;
        cfg.pilot_samples = 48;
        cfg.seed = 9;
        cfg.threads = 1;
        std::string one = gridse::mc_summary_to_json_string(gridse::run_mc(se, cfg), se);
        cfg.threads = 3;
        std::string three = gridse::mc_summary_to_json_string(gridse::run_mc(se, cfg), se);
        expect(one == three, "summaries differ between 1 and 3 threads");
    });

    std::cout << "selftest: " << st.passed << " passed, " << st.failures.size() << " failed\n";
    return st.failures.empty() ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------

void add_noise_flags(CLI::App* cmd, gridse::NoiseSpec& spec) {
    cmd->add_option("--pmu-perfect", spec.frac_pmu_perfect,
                    "Fraction of buses given perfect PMUs")
        ->capture_default_str();
    cmd->add_option("--pmu-noisy", spec.frac_pmu_noisy, "Fraction of buses given noisy PMUs")
        ->capture_default_str();
    cmd->add_option("--pmu-sigma", spec.pmu_sigma_rel,
                    "Relative sigma of noisy PMU channels")
        ->capture_default_str();
    cmd->add_option("--rtu-sigma-vm", spec.rtu_sigma_vm_rel,
                    "Relative sigma of RTU voltage magnitude")
        ->capture_default_str();
    cmd->add_option("--rtu-sigma-pq", spec.rtu_sigma_pq_rel,
                    "Relative sigma of RTU active/reactive power")
        ->capture_default_str();
    cmd->add_option("--g-pmu", spec.g_pmu, "PMU source conductance, p.u.")
        ->capture_default_str();
    cmd->add_option("--rtu-gamma", spec.rtu_gamma, "Baseline RTU objective weight")
        ->capture_default_str();
    cmd->add_option("--degraded-frac", spec.degraded_frac,
                    "Fraction of RTUs degraded (noisier, down-weighted)")
        ->capture_default_str();
    cmd->add_option("--degraded-sigma-mult", spec.degraded_sigma_mult,
                    "Sigma multiplier for degraded RTUs")
        ->capture_default_str();
    cmd->add_option("--degraded-weight-div", spec.degraded_weight_div,
                    "Weight divisor for degraded RTUs")
        ->capture_default_str();
    cmd->add_option("--weight-exponent", spec.weight_exponent,
                    "Exponent on the degraded weight divisor")
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Power-grid state estimation: power flow, measurement synthesis,\n"
                 "linear/nonlinear estimators, trial evaluation, Monte Carlo."};
    app.require_subcommand(1);
    app.set_version_flag("--version", "gridse 0.1.0");
    // Let global flags (--log-level) appear after the subcommand too.
    app.fallthrough(true);

    std::string log_level = "info";
    app.add_option("--log-level", log_level, "Logging to stderr")
        ->check(CLI::IsMember({"quiet", "info", "debug"}))
        ->capture_default_str();

    PfArgs pf;
    CLI::App* pf_cmd = app.add_subcommand("pf", "Solve the power flow of a grid case");
    pf_cmd->add_option("case", pf.case_path, "Grid case file (.m)")->required();
    pf_cmd->add_option("--tol", pf.tol, "Convergence tolerance on the current residual")
        ->capture_default_str();
    pf_cmd->add_option("--max-iter", pf.max_iter, "Newton iteration cap")->capture_default_str();
    pf_cmd->add_option("--init", pf.init, "Initial state")
        ->check(CLI::IsMember({"flat", "case"}))
        ->capture_default_str();
    pf_cmd->add_option("-o,--output", pf.output, "Results JSON (stdout when omitted)");

    GenGridArgs gg;
    CLI::App* gg_cmd = app.add_subcommand("gen-grid", "Synthesize a solvable grid case");
    gg_cmd->add_option("--buses", gg.opt.buses, "Number of buses")->capture_default_str();
    gg_cmd->add_option("--seed", gg.opt.seed, "Topology/parameter seed")->capture_default_str();
    gg_cmd->add_option("--pv-frac", gg.opt.pv_frac, "Fraction of non-slack buses made PV")
        ->capture_default_str();
    gg_cmd->add_option("--chord-frac", gg.opt.chord_frac, "Extra ties as a fraction of buses")
        ->capture_default_str();
    gg_cmd->add_option("--xfmr-frac", gg.opt.xfmr_frac, "Fraction of branches as transformers")
        ->capture_default_str();
    gg_cmd->add_option("--load-scale", gg.opt.load_scale, "Mean PQ-bus load, p.u.")
        ->capture_default_str();
    gg_cmd->add_option("-o,--output", gg.output, "Case file (stdout when omitted)");

    GenCaseArgs gc;
    CLI::App* gc_cmd =
        app.add_subcommand("gen-case", "Generate a measurement set from a solved power flow");
    gc_cmd->add_option("case", gc.case_path, "Grid case file (.m)")->required();
    gc_cmd->add_option("--seed", gc.seed, "Device assignment and noise seed")
        ->capture_default_str();
    add_noise_flags(gc_cmd, gc.spec);
    gc_cmd->add_option("--pf-tol", gc.pf_tol, "Power-flow tolerance")->capture_default_str();
    gc_cmd->add_option("--pf-max-iter", gc.pf_max_iter, "Power-flow iteration cap")
        ->capture_default_str();
    gc_cmd->add_option("-o,--output", gc.output, "Measurement-set JSON (stdout when omitted)");

    EstimateArgs est;
    CLI::App* est_cmd = app.add_subcommand("estimate", "Run a state estimator on a measurement set");
    est_cmd->add_option("secase", est.se_path, "Measurement-set JSON")->required();
    est_cmd->add_option("--model", est.model, "Estimator model")
        ->check(CLI::IsMember({"delta-i", "delta-y"}))
        ->capture_default_str();
    est_cmd->add_option("--tol", est.tol, "Nonlinear KKT residual tolerance")
        ->capture_default_str();
    est_cmd->add_option("--max-iter", est.max_iter, "Nonlinear iteration cap")
        ->capture_default_str();
    est_cmd->add_option("--damping", est.damping, "Initial Newton step scale")
        ->capture_default_str();
    est_cmd->add_option("--init", est.init, "Nonlinear start point")
        ->check(CLI::IsMember({"linear", "flat"}))
        ->capture_default_str();
    est_cmd->add_option("-o,--output", est.output, "Results JSON (stdout when omitted)");

    TrialsArgs tr;
    CLI::App* tr_cmd = app.add_subcommand(
        "trials", "Repeated noisy estimation runs with CI-based stopping; emits a CSV row");
    tr_cmd->add_option("case", tr.case_path, "Grid case file (.m)")->required();
    tr_cmd->add_option("--model", tr.model, "Estimator model")
        ->check(CLI::IsMember({"delta-i", "delta-y"}))
        ->capture_default_str();
    tr_cmd->add_option("--measure", tr.measure, "Error measure against truth")
        ->check(CLI::IsMember({"ss", "max"}))
        ->capture_default_str();
    tr_cmd->add_option("--ci", tr.ci.level, "Confidence level")->capture_default_str();
    tr_cmd->add_option("--rel", tr.ci.rel, "Stop when half-width < rel * |mean|")
        ->capture_default_str();
    tr_cmd->add_option("--min-trials", tr.ci.min_trials, "Trials before the stop rule applies")
        ->capture_default_str();
    tr_cmd->add_option("--max-trials", tr.ci.max_trials, "Hard trial cap")->capture_default_str();
    tr_cmd->add_option("--seed", tr.seed, "Assignment and noise base seed")->capture_default_str();
    tr_cmd->add_option("--threads", tr.threads, "Concurrent trial evaluations")
        ->capture_default_str();
    tr_cmd->add_flag("--weighted,!--unweighted", tr.weighted,
                     "Divide degraded-RTU weights (default) or keep them uniform");
    add_noise_flags(tr_cmd, tr.spec);
    tr_cmd->add_option("-o,--output", tr.output, "CSV output (stdout when omitted)");

    McArgs mc;
    CLI::App* mc_cmd =
        app.add_subcommand("mc", "Monte Carlo sweep over measurement (and network) uncertainty");
    mc_cmd->add_option("secase", mc.se_path, "Measurement-set JSON")->required();
    mc_cmd->add_option("--samples", mc.cfg.samples, "Number of samples")->capture_default_str();
    mc_cmd->add_option("--seed", mc.cfg.seed, "Sampling seed")->capture_default_str();
    mc_cmd->add_option("--threads", mc.cfg.threads, "Worker threads (0 = physical cores)")
        ->capture_default_str();
    mc_cmd->add_option("--bins", mc.cfg.histogram_bins, "Histogram bins per bus")
        ->capture_default_str();
    mc_cmd->add_option("--pilot", mc.cfg.pilot_samples, "Pilot samples fixing histogram edges")
        ->capture_default_str();
    mc_cmd->add_option("--net-uncertainty", mc.net_path,
                       "JSON with branch-parameter sigmas; enables network redraws");
    mc_cmd->add_option("--hist-dir", mc.hist_dir, "Directory for per-bus histogram CSVs");
    mc_cmd->add_option("-o,--output", mc.output, "Summary JSON (stdout when omitted)");

    CLI::App* self_cmd = app.add_subcommand("selftest", "Run built-in consistency checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    g_log_level = log_level == "quiet" ? LogLevel::quiet
                : log_level == "debug" ? LogLevel::debug
                                       : LogLevel::info;
    log_debug("log level " + log_level);

    try {
        if (pf_cmd->parsed()) run_pf(pf);
        else if (gg_cmd->parsed()) run_gen_grid(gg);
        else if (gc_cmd->parsed()) run_gen_case(gc);
        else if (est_cmd->parsed()) run_estimate(est);
        else if (tr_cmd->parsed()) run_trials_cmd(tr);
        else if (mc_cmd->parsed()) run_mc_cmd(mc);
        else if (self_cmd->parsed()) return run_selftest();
    } catch (const gridse::IoError& e) {
        std::cerr << "gridse: error: " << e.what() << "\n";
        return kExitIo;
    } catch (const gridse::ParseError& e) {
        std::cerr << "gridse: error: " << e.what() << "\n";
        return kExitIo;
    } catch (const gridse::SchemaError& e) {
        std::cerr << "gridse: error: " << e.what() << "\n";
        return kExitIo;
    } catch (const gridse::ValidationError& e) {
        std::cerr << "gridse: error: " << e.what() << "\n";
        return kExitIo;
    } catch (const gridse::Error& e) {
        std::cerr << "gridse: error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "gridse: internal error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
