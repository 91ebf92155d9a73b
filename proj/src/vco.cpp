#include "fsynth/vco.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fsynth {

double band_step(const VcoParams& p) { return (p.f_max_hz - p.f_min_hz) / p.n_caps; }

double band_span(const VcoParams& p) { return band_step(p) / (1.0 - p.band_overlap); }

double band_frequency(int band, const VcoParams& p)
{
    if (band < 0 || band > p.n_caps)
        throw VcoError("band " + std::to_string(band) + " outside 0.." + std::to_string(p.n_caps));
    return p.f_max_hz - band * band_step(p);
}

double vco_frequency(int band, double v_ctrl, double v_ddl_dev, const VcoParams& p)
{
    const double f = band_frequency(band, p) + p.kvco_hz_per_v * (v_ctrl - p.v_mid_v) + p.kvddl_hz_per_v * v_ddl_dev;
    return std::clamp(f, 0.5 * p.f_min_hz, 1.2 * p.f_max_hz);
}

VcoEdge vco_next_edge(const VcoState& state, double v_ctrl, double v_ddl_dev, const VcoParams& p,
                      double jitter_s, double tick)
{
    const double f = vco_frequency(state.band, v_ctrl, v_ddl_dev, p);
    if (!(f > 0.0)) throw VcoError("non-positive VCO frequency");

    VcoEdge out{state, {}};
    out.state.cycles += 1;
    out.state.last_update = {state.last_update.cycle + 1, state.last_update.residual + (1.0 / f - tick) + jitter_s};
    out.edge = {Signal::Vco, Polarity::Rising, out.state.last_update};
    return out;
}

double lock_vctrl(int band, double target_hz, const VcoParams& p)
{
    return p.v_mid_v + (target_hz - band_frequency(band, p)) / p.kvco_hz_per_v;
}

int band_search(double target_hz, const VcoParams& p, double vdd)
{
    int best = 0;
    double best_err = std::abs(band_frequency(0, p) - target_hz);
    for (int b = 1; b <= p.n_caps; ++b) {
        const double err = std::abs(band_frequency(b, p) - target_hz);
        if (err < best_err) {
            best = b;
            best_err = err;
        }
    }
    const double v = lock_vctrl(best, target_hz, p);
    if (!(v > 0.1 * vdd && v < 0.9 * vdd))
        throw VcoError("target " + std::to_string(target_hz) + " Hz unreachable in any band (needs v_ctrl " +
                       std::to_string(v) + " V)");
    return best;
}

}  // namespace fsynth
