#pragma once

#include <optional>
#include <stdexcept>

#include "fsynth/random.hpp"

namespace fsynth {

struct VcoPhaseNoise {
    double l_dbc_hz = -110.0;
    double offset_hz = 1e6;
};

struct SupplyRipple {
    double v_m = 0.0;
    double f_m_hz = 10e6;
};

struct NoiseSpec {
    std::optional<VcoPhaseNoise> vco_pn;
    double ref_rj_s = 0.0;                ///< white per-edge jitter on REF
    std::optional<SupplyRipple> ripple;   ///< sinusoid on VDDL
    double supply_noise_v_rthz = 0.0;     ///< one-sided white PSD on VDDL, V/sqrt(Hz)
    double buffer_dcd_s = 0.0;            ///< delay added to every falling output edge
};

class NoiseError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/*!
 * Per-cycle period-jitter sigma of a white-FM oscillator whose single-sideband
 * phase noise is `l_dbc_hz` at offset `offset_hz`.
 *
 * Independent period errors of variance sigma^2 make the edge-time error a
 * random walk; its phase PSD is S_phi(f) = 2 f0^3 sigma^2 / f^2, so with
 * L = S_phi / 2 we get sigma = sqrt(L) * offset / f0^1.5.
 */
double sigma_from_pn(double l_dbc_hz, double offset_hz, double f0_hz);

/// Supply deviation on VDDL: exact ripple plus white noise sampled once per
/// VCO cycle (bandwidth f_sample/2, variance psd^2 * f_sample/2).
class SupplyWaveform
{
  public:
    SupplyWaveform(const NoiseSpec& spec, double f_sample_hz, std::uint64_t seed);

    double ripple(double t) const;
    double operator()(double t);

    bool active() const { return ripple_ || noise_sigma_ > 0.0; }

  private:
    std::optional<SupplyRipple> ripple_;
    double noise_sigma_ = 0.0;
    RandomStream stream_;
};

double supply_at(double t, const NoiseSpec& spec, double f_sample_hz, RandomStream& stream);

}  // namespace fsynth
