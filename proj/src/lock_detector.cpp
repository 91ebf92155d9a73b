#include "fsynth/lock_detector.hpp"

#include <algorithm>
#include <cmath>

namespace fsynth {

double steady_state_vx(double duty, const LockDetectorParams& p)
{
    if (!(duty >= 0.0 && duty < 1.0)) throw LockDetectorError("duty cycle must lie in [0, 1)");
    return p.vdd_v / (duty / (1.0 - duty) * p.r_ratio + 1.0);
}

double d_min(const LockDetectorParams& p) { return 1.0 / (p.alpha / (1.0 - p.alpha) * p.r_ratio + 1.0); }

LockDetectorStep lockdet_advance(const LockDetectorState& state, bool active, double dt, const LockDetectorParams& p)
{
    LockDetectorStep out{state, std::nullopt};
    if (dt <= 0.0) return out;

    // Idle: v_x -> vdd with tau. Active: v_x -> 0 with tau / r_ratio.
    const double target = active ? 0.0 : p.vdd_v;
    const double tc = active ? p.tau_s / p.r_ratio : p.tau_s;
    const double v0 = state.v_x;
    out.state.v_x = std::clamp(target + (v0 - target) * std::exp(-dt / tc), 0.0, p.vdd_v);

    const double hi = p.alpha * p.vdd_v;
    const double lo = p.alpha_low * p.vdd_v;
    if (!state.locked && !active && v0 < hi && out.state.v_x >= hi) {
        out.state.locked = true;
        out.toggled_after = tc * std::log((target - v0) / (target - hi));
    } else if (state.locked && active && v0 > lo && out.state.v_x <= lo) {
        out.state.locked = false;
        out.toggled_after = tc * std::log(v0 / lo);
    }
    if (out.toggled_after) out.toggled_after = std::clamp(*out.toggled_after, 0.0, dt);
    return out;
}

}  // namespace fsynth
