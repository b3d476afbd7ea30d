#include "gridse/network.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "gridse/rng.hpp"

namespace gridse {

void validate(const PerturbationSpec& spec) {
    auto check = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError(std::string(name) + " must be a nonnegative number");
    };
    check(spec.sigma_line_r, "sigma_line_r");
    check(spec.sigma_line_x, "sigma_line_x");
    check(spec.sigma_xfmr_r, "sigma_xfmr_r");
    check(spec.sigma_xfmr_x, "sigma_xfmr_x");
}

SplitAdmittance build_split_admittance(const GridCase& c, const PerturbedBranches* overlay) {
    using C = std::complex<double>;
    const int n = c.size();
    if (overlay && (overlay->r.size() != c.branches.size() ||
                    overlay->x.size() != c.branches.size()))
        throw ValidationError("perturbation overlay does not cover the branch list");

    BusIndex index = make_bus_index(c);
    std::vector<Eigen::Triplet<C>> trips;
    trips.reserve(4 * c.branches.size() + c.buses.size());

    for (std::size_t k = 0; k < c.branches.size(); ++k) {
        const Branch& br = c.branches[k];
        if (!br.in_service) continue;
        double r = overlay ? overlay->r[k] : br.r;
        double x = overlay ? overlay->x[k] : br.x;
        if (r == 0.0 && x == 0.0)
            throw DegenerateBranch("branch " + std::to_string(br.from) + "-" +
                                   std::to_string(br.to) + " has zero series impedance");
        C ys = 1.0 / C(r, x);
        C ysh(0.0, br.b_chg / 2.0);
        C ratio = std::polar(br.tap, br.shift);  // tap side = from

        int f = index.at(br.from);
        int t = index.at(br.to);
        trips.emplace_back(f, f, (ys + ysh) / (br.tap * br.tap));
        trips.emplace_back(t, t, ys + ysh);
        trips.emplace_back(f, t, -ys / std::conj(ratio));
        trips.emplace_back(t, f, -ys / ratio);
    }
    for (int i = 0; i < n; ++i) {
        const Bus& b = c.buses[i];
        if (b.gs != 0.0 || b.bs != 0.0) trips.emplace_back(i, i, C(b.gs, b.bs));
    }

    SplitAdmittance adm;
    adm.n = n;
    adm.ybus.resize(n, n);
    adm.ybus.setFromTriplets(trips.begin(), trips.end());

    // Mirror every structural complex entry into all four real blocks, zeros
    // included, so the G and B blocks share one pattern.
    std::vector<Triplet> rt;
    rt.reserve(4 * static_cast<std::size_t>(adm.ybus.nonZeros()));
    for (int col = 0; col < adm.ybus.outerSize(); ++col) {
        for (SpMatC::InnerIterator it(adm.ybus, col); it; ++it) {
            int i = static_cast<int>(it.row());
            int j = static_cast<int>(it.col());
            double g = it.value().real();
            double b = it.value().imag();
            rt.emplace_back(i, j, g);
            rt.emplace_back(i, n + j, -b);
            rt.emplace_back(n + i, j, b);
            rt.emplace_back(n + i, n + j, g);
        }
    }
    adm.blocks.resize(2 * n, 2 * n);
    adm.blocks.setFromTriplets(rt.begin(), rt.end());
    return adm;
}

PerturbedBranches perturb_branches(const GridCase& c, const PerturbationSpec& spec,
                                   std::uint64_t seed, std::uint64_t sample) {
    validate(spec);
    PerturbedBranches out;
    out.r.reserve(c.branches.size());
    out.x.reserve(c.branches.size());
    for (std::size_t k = 0; k < c.branches.size(); ++k) {
        const Branch& br = c.branches[k];
        bool xfmr = is_transformer(br);
        double sr = xfmr ? spec.sigma_xfmr_r : spec.sigma_line_r;
        double sx = xfmr ? spec.sigma_xfmr_x : spec.sigma_line_x;
        rng::Stream sr_stream(seed, sample, rng::channel_id(rng::Domain::mc_net, k, 0));
        rng::Stream sx_stream(seed, sample, rng::channel_id(rng::Domain::mc_net, k, 1));
        double r = sr_stream.normal(br.r, sr * br.r);
        double x = sx_stream.normal(br.x, sx * std::abs(br.x));
        out.r.push_back(std::max(r, 0.0));
        out.x.push_back(x);
    }
    return out;
}

}  // namespace gridse
