#include "fsynth/noise.hpp"

#include <cmath>
#include <numbers>

namespace fsynth {

double sigma_from_pn(double l_dbc_hz, double offset_hz, double f0_hz)
{
    if (!(offset_hz > 0.0) || !(f0_hz > 0.0)) throw NoiseError("offset and carrier must be positive");
    if (!std::isfinite(l_dbc_hz)) throw NoiseError("phase-noise level must be finite");
    return std::sqrt(std::pow(10.0, l_dbc_hz / 10.0)) * offset_hz / std::pow(f0_hz, 1.5);
}

SupplyWaveform::SupplyWaveform(const NoiseSpec& spec, double f_sample_hz, std::uint64_t seed)
    : ripple_(spec.ripple), stream_(seed, "supply.vddl")
{
    if (ripple_ && ripple_->v_m == 0.0) ripple_.reset();
    noise_sigma_ = spec.supply_noise_v_rthz * std::sqrt(0.5 * f_sample_hz);
}

double SupplyWaveform::ripple(double t) const
{
    if (!ripple_) return 0.0;
    return ripple_->v_m * std::sin(2.0 * std::numbers::pi * ripple_->f_m_hz * t);
}

double SupplyWaveform::operator()(double t)
{
    double v = ripple(t);
    if (noise_sigma_ > 0.0) v += noise_sigma_ * stream_.gaussian();
    return v;
}

double supply_at(double t, const NoiseSpec& spec, double f_sample_hz, RandomStream& stream)
{
    double v = 0.0;
    if (spec.ripple) v += spec.ripple->v_m * std::sin(2.0 * std::numbers::pi * spec.ripple->f_m_hz * t);
    if (spec.supply_noise_v_rthz > 0.0)
        v += spec.supply_noise_v_rthz * std::sqrt(0.5 * f_sample_hz) * stream.gaussian();
    return v;
}

}  // namespace fsynth
