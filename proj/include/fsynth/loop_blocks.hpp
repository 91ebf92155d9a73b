#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "fsynth/timebase.hpp"

namespace fsynth {

// ---------------------------------------------------------------------------
// Phase-frequency detector

struct PfdParams {
    double t_reset_s = 100e-12;  ///< both-high to reset delay (three NAND stages)
};

struct PfdState {
    bool up = false;
    bool dn = false;
    std::optional<Timestamp> pending_reset_at;  ///< set iff up && dn
};

struct PfdOutput {
    PfdState state;
    std::vector<EdgeEvent> emitted;
};

/// Sequential PFD. A REF rising edge sets UP, a CLK (or DIV) rising edge sets
/// DN. Falling edges are ignored so the output does not depend on input duty
/// cycle. Once both are high a reset is scheduled `t_reset` later.
PfdOutput pfd_step(const PfdState& state, const EdgeEvent& event, const PfdParams& params);

/// Reset expiry: clears UP and DN together at the scheduled time.
PfdOutput pfd_reset_expiry(const PfdState& state);

// ---------------------------------------------------------------------------
// Charge pump

struct ChargePumpParams {
    double icp_a = 10e-6;
    double mismatch = 0.0;  ///< I_up = I_cp(1+e/2), I_dn = I_cp(1-e/2)
    double leakage_a = 0.0;
};

inline double cp_current(bool up, bool dn, const ChargePumpParams& p)
{
    const double i_up = p.icp_a * (1.0 + 0.5 * p.mismatch);
    const double i_dn = p.icp_a * (1.0 - 0.5 * p.mismatch);
    return (up ? i_up : 0.0) - (dn ? i_dn : 0.0) + p.leakage_a;
}

// ---------------------------------------------------------------------------
// Passive second-order loop filter
//
// The charge-pump output node carries c2 to ground and the series branch
// rz + c1 to ground. v_ctrl is the voltage on that node.

struct LoopFilterParams {
    double rz_ohm = 38.0e3;
    double c1_f = 57.0e-12;
    double c2_f = 6.3e-12;
};

struct FilterState {
    double v_c1 = 0.0;
    double v_ctrl = 0.0;
};

/// Exact advance of the two-capacitor network under a constant input current.
FilterState filter_advance(const FilterState& state, double i_in, double dt, const LoopFilterParams& params);

/// Clamps both node voltages to [0, vdd]. Returns true when anything moved.
bool clamp_to_rails(FilterState& state, double vdd);

/// Transfer impedance V_ctrl/I_in at angular frequency omega (rad/s).
std::complex<double> filter_impedance(const LoopFilterParams& params, double omega);

}  // namespace fsynth
