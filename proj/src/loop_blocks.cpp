#include "fsynth/loop_blocks.hpp"

#include <algorithm>
#include <cmath>

namespace fsynth {

PfdOutput pfd_step(const PfdState& state, const EdgeEvent& event, const PfdParams& params)
{
    PfdOutput out{state, {}};
    if (event.polarity != Polarity::Rising) return out;

    const bool is_ref = event.signal == Signal::Ref;
    const bool is_fb = event.signal == Signal::Clk || event.signal == Signal::Div;
    if (!is_ref && !is_fb) return out;

    bool& flag = is_ref ? out.state.up : out.state.dn;
    if (flag) return out;  // already asserted; a second edge before reset has no effect
    flag = true;
    out.emitted.push_back({is_ref ? Signal::Up : Signal::Dn, Polarity::Rising, event.time});

    if (out.state.up && out.state.dn) out.state.pending_reset_at = advance(event.time, params.t_reset_s);
    return out;
}

PfdOutput pfd_reset_expiry(const PfdState& state)
{
    PfdOutput out{state, {}};
    if (!state.pending_reset_at) return out;
    const Timestamp at = *state.pending_reset_at;
    out.emitted.push_back({Signal::Up, Polarity::Falling, at});
    out.emitted.push_back({Signal::Dn, Polarity::Falling, at});
    out.state = PfdState{};
    return out;
}

FilterState filter_advance(const FilterState& state, double i_in, double dt, const LoopFilterParams& params)
{
    if (dt <= 0.0) return state;
    const double c1 = params.c1_f;
    const double c2 = params.c2_f;
    const double c_total = c1 + c2;
    const double tau = params.rz_ohm * c1 * c2 / c_total;

    // Total charge grows linearly; the branch difference d = v_ctrl - v_c1
    // relaxes exponentially toward i*tau/c2.
    const double d0 = state.v_ctrl - state.v_c1;
    const double d_inf = i_in * tau / c2;
    const double decay = -std::expm1(-dt / tau);  // 1 - exp(-dt/tau)
    const double delta_d = (d_inf - d0) * decay;

    // Written as increments so that with i_in = 0 the stored charge
    // c1*v_c1 + c2*v_ctrl is unchanged apart from rounding in delta_d.
    const double dv_c1 = (i_in * dt - c2 * delta_d) / c_total;
    FilterState out;
    out.v_c1 = state.v_c1 + dv_c1;
    out.v_ctrl = state.v_ctrl + dv_c1 + delta_d;
    return out;
}

bool clamp_to_rails(FilterState& state, double vdd)
{
    const FilterState before = state;
    state.v_ctrl = std::clamp(state.v_ctrl, 0.0, vdd);
    state.v_c1 = std::clamp(state.v_c1, 0.0, vdd);
    return state.v_ctrl != before.v_ctrl || state.v_c1 != before.v_c1;
}

std::complex<double> filter_impedance(const LoopFilterParams& p, double omega)
{
    const std::complex<double> s{0.0, omega};
    const double c_total = p.c1_f + p.c2_f;
    const double tau_z = p.rz_ohm * p.c1_f;
    const double tau_p = p.rz_ohm * p.c1_f * p.c2_f / c_total;
    return (1.0 + s * tau_z) / (s * c_total * (1.0 + s * tau_p));
}

}  // namespace fsynth
