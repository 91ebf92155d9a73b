#pragma once

#include <complex>
#include <stdexcept>

#include "fsynth/loop_blocks.hpp"

namespace fsynth {

class DesignError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// Worked values quoted alongside the budget formulas in the original
/// write-up. Kept for cross-check reports only; nothing asserts them.
namespace published {
inline constexpr double kPsrrDb = 36.0;               // 10 mV ripple at 10 MHz, -60 dBc target
inline constexpr double kMaxSupplyNoiseVRtHz = 7.0e-9;  // -110 dBc/Hz at 1 MHz
inline constexpr double kDMin = 0.059;
}  // namespace published

// ---------------------------------------------------------------------------
// Supply budgets

struct SpurEstimate {
    double level_dbc = 0.0;
    double modulation_index = 0.0;  ///< K*Vm/fm
    bool narrowband = false;        ///< index < 0.5, where the sideband formula holds
};

/// 20 log10(K Vm / (2 fm)).
SpurEstimate spur_amplitude(double k_push_hz_per_v, double v_m, double f_m_hz);

struct PsrrRequirement {
    double psrr_db = 0.0;
    double v_allowed_v = 0.0;
    bool already_compliant = false;  ///< ripple already meets the target; psrr_db is 0
};

PsrrRequirement required_psrr(double v_in, double f_m_hz, double k_push_hz_per_v, double spur_target_dbc);

/// 10 log10(vn^2 (K/df)^2), vn in V/rtHz.
double supply_pn(double vn_v_rthz, double k_push_hz_per_v, double delta_f_hz);

/// Inverse of supply_pn.
double max_supply_noise(double l_target_dbc_hz, double k_push_hz_per_v, double delta_f_hz);

// ---------------------------------------------------------------------------
// Loop filter synthesis

struct FilterDesignSpec {
    double icp_a = 10e-6;
    double kvco_hz_per_v = 0.6e9;
    double n_total = 144.0;  ///< VCO to PFD division
    double f_c_hz = 230e3;
    double phase_margin_deg = 55.0;
    double f_ref_hz = 50e6;  ///< only used for the f_c < f_ref/10 check
};

struct LoopCheck {
    double gain_at_fc = 0.0;        ///< |G(j 2 pi f_c)|
    double phase_margin_deg = 0.0;  ///< 180 + arg G at f_c
};

struct FilterDesign {
    LoopFilterParams filter;
    LoopCheck check;
};

/// Open-loop gain G(s) = (icp/2pi) Z(s) (2pi kvco/s) / n at s = j 2 pi f.
std::complex<double> open_loop_gain(const LoopFilterParams& f, double icp_a, double kvco_hz_per_v, double n_total,
                                    double f_hz);

LoopCheck check_loop(const LoopFilterParams& f, const FilterDesignSpec& spec);

/// Components placing the open-loop crossover at f_c with the requested
/// phase margin (peak of the phase bump at f_c). Throws DesignError for
/// an invalid spec or a margin outside 30-80 degrees.
FilterDesign design_loop_filter(const FilterDesignSpec& spec);

/// -3 dB frequency of the closed-loop reference-to-output transfer G/(1+G).
double closed_loop_bandwidth(const LoopFilterParams& f, double icp_a, double kvco_hz_per_v, double n_total);

}  // namespace fsynth
