#include "gridse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "gridse/rng.hpp"

namespace gridse {

GridCase make_synthetic_grid(const SynthOptions& opt) {
    const int n = opt.buses;
    if (n < 2) throw ValidationError("synthetic grid needs at least 2 buses");
    if (!(opt.pv_frac >= 0.0 && opt.pv_frac <= 1.0))
        throw ValidationError("pv_frac must lie in [0, 1]");
    if (!(opt.chord_frac >= 0.0) || !(opt.xfmr_frac >= 0.0 && opt.xfmr_frac <= 1.0))
        throw ValidationError("chord_frac must be nonnegative and xfmr_frac in [0, 1]");
    if (!(opt.load_scale >= 0.0)) throw ValidationError("load_scale must be nonnegative");

    // One sequential stream; the draw order below is part of the function's
    // deterministic contract.
    rng::Stream s(opt.seed, 0, rng::channel_id(rng::Domain::misc, 0));
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * s.uniform01(); };

    GridCase c;
    c.name = "synth" + std::to_string(n) + "_s" + std::to_string(opt.seed);
    c.base_mva = 100.0;

    // Bus roles: bus 1 slack, a shuffled sprinkling of PV buses, the rest PQ.
    auto n_pv = static_cast<int>(std::floor(opt.pv_frac * (n - 1)));
    std::vector<int> non_slack;
    for (int id = 2; id <= n; ++id) non_slack.push_back(id);
    rng::shuffle(non_slack, s);
    std::set<int> pv_ids(non_slack.begin(), non_slack.begin() + n_pv);

    double total_load = 0.0;
    for (int id = 1; id <= n; ++id) {
        Bus b;
        b.id = id;
        if (id == 1)
            b.kind = BusKind::slack;
        else if (pv_ids.count(id))
            b.kind = BusKind::pv;
        else
            b.kind = BusKind::pq;
        if (b.kind == BusKind::pq) {
            b.pd = opt.load_scale * uni(0.5, 1.5);
            b.qd = b.pd * uni(0.2, 0.45);
            total_load += b.pd;
            if (s.uniform01() < 0.05) b.bs = uni(0.01, 0.05);  // capacitor bank
        }
        c.buses.push_back(b);
    }

    std::set<std::pair<int, int>> used;
    auto add_branch = [&](int from, int to) {
        std::pair<int, int> key = std::minmax(from, to);
        if (from == to || used.count(key)) return false;
        used.insert(key);
        Branch br;
        br.from = from;
        br.to = to;
        br.x = uni(0.03, 0.10);
        br.r = 0.3 * br.x * uni(0.8, 1.2);  // lossy line
        br.b_chg = uni(0.004, 0.02);
        c.branches.push_back(br);
        return true;
    };

    // Connecting ring, hub ties from the slack, then random cross chords.
    for (int id = 1; id < n; ++id) add_branch(id, id + 1);
    if (n > 2) add_branch(n, 1);
    int n_hub = std::max(2, n / 50);
    for (int h = 1; h <= n_hub; ++h) {
        int target = 1 + static_cast<int>((static_cast<long long>(h) * n) / (n_hub + 1));
        if (target > 1 && target < n) add_branch(1, target);
    }
    // Chord spans stay local, the way geographically embedded grids mesh;
    // unbounded spans would turn big cases into expanders whose factors
    // fill in catastrophically.
    auto n_chords = static_cast<int>(std::floor(opt.chord_frac * n));
    int max_span = std::max(4, std::min(40, n / 5));
    for (int i = 0; i < n_chords; ++i) {
        for (int attempt = 0; attempt < 20; ++attempt) {
            int a = 1 + static_cast<int>(s.next_below(static_cast<std::uint32_t>(n)));
            int span = 2 + static_cast<int>(s.next_below(static_cast<std::uint32_t>(max_span - 1)));
            int b = 1 + (a - 1 + span) % n;
            if (add_branch(a, b)) break;
        }
    }

    // Off-nominal-tap transformers on a shuffled subset of branches; charging
    // belongs to lines, so it is dropped there.
    auto n_xfmr = static_cast<int>(std::floor(opt.xfmr_frac * static_cast<double>(c.branches.size())));
    std::vector<int> branch_order(c.branches.size());
    for (std::size_t i = 0; i < branch_order.size(); ++i)
        branch_order[i] = static_cast<int>(i);
    rng::shuffle(branch_order, s);
    for (int i = 0; i < n_xfmr; ++i) {
        Branch& br = c.branches[static_cast<std::size_t>(branch_order[static_cast<std::size_t>(i)])];
        double tap = uni(0.95, 1.05);
        if (std::abs(tap - 1.0) < 1e-3) tap = 0.97;
        br.tap = tap;
        br.b_chg = 0.0;
        if (s.next_below(2) == 1) br.shift = uni(-0.05, 0.05);
    }

    // Generators: PV units share most of the load evenly, slack covers the
    // remainder plus losses.
    double pg_each = n_pv > 0 ? total_load / static_cast<double>(n_pv + 2) : 0.0;
    Gen slack_gen;
    slack_gen.bus = 1;
    slack_gen.vset = uni(1.0, 1.03);
    c.gens.push_back(slack_gen);
    for (int id = 2; id <= n; ++id) {
        if (!pv_ids.count(id)) continue;
        Gen g;
        g.bus = id;
        g.pg = pg_each;
        g.vset = uni(1.0, 1.03);
        c.gens.push_back(g);
    }

    validate(c);
    return c;
}

}  // namespace gridse
