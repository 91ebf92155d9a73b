#pragma once

#include <optional>
#include <stdexcept>

namespace fsynth {

/// Duty-cycle lock detector. v_x is charged toward VDD through R1 while the
/// PFD is idle and discharged through R2 while UP or DN is asserted; a
/// Schmitt trigger with thresholds alpha*VDD / alpha_low*VDD reads it.
struct LockDetectorParams {
    double alpha = 2.0 / 3.0;
    double alpha_low = 1.0 / 3.0;
    double r_ratio = 8.0;   ///< R1/R2
    double tau_s = 10e-6;   ///< R1*C
    double vdd_v = 1.2;
};

struct LockDetectorState {
    double v_x = 0.0;
    bool locked = false;
};

class LockDetectorError : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

/// Charge-balance voltage of v_x for a time-averaged duty cycle D.
double steady_state_vx(double duty, const LockDetectorParams& p);

/// Largest duty cycle that still reads as locked.
double d_min(const LockDetectorParams& p);

struct LockDetectorStep {
    LockDetectorState state;
    std::optional<double> toggled_after;  ///< offset into the interval where `locked` flipped
};

/// Closed-form advance over dt with the PFD activity `active` held constant.
/// At most one Schmitt transition can occur in an interval of constant input.
LockDetectorStep lockdet_advance(const LockDetectorState& state, bool active, double dt, const LockDetectorParams& p);

}  // namespace fsynth
