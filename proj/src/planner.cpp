#include <algorithm>
#include <cmath>
#include <limits>

#include "fsynth/progif.hpp"

namespace fsynth {

namespace {

constexpr double kExactRel = 1e-12;

struct Fit {
    int ratio = 1;
    double f_hz = 0.0;
    double ppm = 0.0;
    bool exact = false;
};

Fit best_ratio(double f_quad, double target, const std::vector<int>& ratios)
{
    Fit best;
    double best_err = std::numeric_limits<double>::infinity();
    for (int r : ratios) {
        const double f = f_quad / r;
        const double err = std::abs(f - target);
        if (err < best_err) {
            best_err = err;
            best = {r, f, (f - target) / target * 1e6, err <= kExactRel * target};
        }
    }
    return best;
}

int nearest_band(double f_vco, const VcoParams& vco)
{
    const double b = std::round((vco.f_max_hz - f_vco) / band_step(vco));
    return static_cast<int>(std::clamp(b, 0.0, static_cast<double>(vco.n_caps)));
}

}  // namespace

Plan plan(const PlanRequest& req, const VcoParams& vco, const StageSets& sets)
{
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(req.f_ref_hz) || !positive(req.f_out_a_hz) || (req.f_out_b_hz && !positive(*req.f_out_b_hz)))
        throw PlanError("frequencies must be positive");
    const double rail_max = vco.f_max_hz / 2.0;
    if (req.f_out_a_hz > rail_max || (req.f_out_b_hz && *req.f_out_b_hz > rail_max))
        throw PlanError("output frequency above the quadrature rail limit f_max/2");

    const int lo = std::max(2, static_cast<int>(std::ceil(vco.f_min_hz / (4.0 * req.f_ref_hz))));
    const int hi = std::min(2 * 63 + 15, static_cast<int>(std::floor(vco.f_max_hz / (4.0 * req.f_ref_hz))));
    if (lo > hi) throw PlanError("no feedback ratio puts the VCO inside its range for this reference");

    const auto ratios = outdiv_available_ratios(sets);
    const double reach_lo = 2.0 * req.f_ref_hz * lo / ratios.back();
    const double reach_hi = 2.0 * req.f_ref_hz * hi / ratios.front();
    for (const std::optional<double>& f : {std::optional<double>(req.f_out_a_hz), req.f_out_b_hz}) {
        if (f && (*f < reach_lo * (1.0 - kExactRel) || *f > reach_hi * (1.0 + kExactRel)))
            throw PlanError("output frequency " + format_number(*f) + " Hz is infeasible for this reference");
    }

    const double mid = 0.5 * (vco.f_min_hz + vco.f_max_hz);
    std::optional<Plan> best;
    double best_worst = 0.0;
    for (int nps = lo; nps <= hi; ++nps) {
        const double f_vco = 4.0 * req.f_ref_hz * nps;
        const double f_quad = f_vco / 2.0;
        const Fit a = best_ratio(f_quad, req.f_out_a_hz, ratios);
        std::optional<Fit> b;
        if (req.f_out_b_hz) b = best_ratio(f_quad, *req.f_out_b_hz, ratios);
        const bool exact = a.exact && (!b || b->exact);
        const double worst = exact ? 0.0 : std::max(std::abs(a.ppm), b ? std::abs(b->ppm) : 0.0);

        if (best) {
            if (best->exact != exact) {
                if (best->exact) continue;
            } else if (worst > best_worst) {
                continue;
            } else if (worst == best_worst && std::abs(f_vco - mid) >= std::abs(best->f_vco_hz - mid)) {
                continue;
            }
        }

        Plan p;
        p.f_ref_hz = req.f_ref_hz;
        p.np_plus_s = nps;
        for (int s = 0; s <= 15; ++s) {
            if ((nps - s) % 2 != 0) continue;
            const int pp = (nps - s) / 2;
            if (pp >= 1 && pp <= 63 && s <= pp) {
                p.p = pp;
                p.s = s;
                break;
            }
        }
        if (p.p == 0) continue;
        p.f_vco_hz = f_vco;
        p.band_hint = nearest_band(f_vco, vco);
        p.outdiv_a = *decompose_ratio(a.ratio, sets);
        p.f_out_a_hz = a.f_hz;
        p.error_ppm_a = a.ppm;
        if (b) {
            p.outdiv_b = *decompose_ratio(b->ratio, sets);
            p.f_out_b_hz = b->f_hz;
            p.error_ppm_b = b->ppm;
        }
        p.exact = exact;
        best = p;
        best_worst = worst;
    }
    if (!best) throw PlanError("no realizable feedback setting");
    return *best;
}

PllConfig config_from_plan(const Plan& p, PllConfig base)
{
    base.f_ref_hz = p.f_ref_hz;
    base.fbdiv = {2, p.p, p.s};
    base.outdiv_a = p.outdiv_a;
    if (p.outdiv_b) base.outdiv_b = *p.outdiv_b;
    return base;
}

}  // namespace fsynth
