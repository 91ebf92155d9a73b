#include "fsynth/design.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace fsynth {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive(double v, const char* name)
{
    if (!(v > 0.0) || !std::isfinite(v)) throw DesignError(std::string(name) + " must be positive");
}

}  // namespace

SpurEstimate spur_amplitude(double k_push_hz_per_v, double v_m, double f_m_hz)
{
    require_positive(k_push_hz_per_v, "k_push");
    require_positive(v_m, "v_m");
    require_positive(f_m_hz, "f_m");
    SpurEstimate s;
    s.modulation_index = k_push_hz_per_v * v_m / f_m_hz;
    s.level_dbc = 20.0 * std::log10(s.modulation_index / 2.0);
    s.narrowband = s.modulation_index < 0.5;
    return s;
}

PsrrRequirement required_psrr(double v_in, double f_m_hz, double k_push_hz_per_v, double spur_target_dbc)
{
    require_positive(v_in, "v_in");
    require_positive(f_m_hz, "f_m");
    require_positive(k_push_hz_per_v, "k_push");
    if (!std::isfinite(spur_target_dbc)) throw DesignError("spur target must be finite");
    PsrrRequirement r;
    r.v_allowed_v = 2.0 * f_m_hz * std::pow(10.0, spur_target_dbc / 20.0) / k_push_hz_per_v;
    if (v_in <= r.v_allowed_v) {
        r.already_compliant = true;
        return r;
    }
    r.psrr_db = 20.0 * std::log10(v_in / r.v_allowed_v);
    return r;
}

double supply_pn(double vn_v_rthz, double k_push_hz_per_v, double delta_f_hz)
{
    require_positive(vn_v_rthz, "vn");
    require_positive(k_push_hz_per_v, "k_push");
    require_positive(delta_f_hz, "delta_f");
    const double x = vn_v_rthz * k_push_hz_per_v / delta_f_hz;
    return 10.0 * std::log10(x * x);
}

double max_supply_noise(double l_target_dbc_hz, double k_push_hz_per_v, double delta_f_hz)
{
    require_positive(k_push_hz_per_v, "k_push");
    require_positive(delta_f_hz, "delta_f");
    if (!std::isfinite(l_target_dbc_hz)) throw DesignError("target level must be finite");
    return std::pow(10.0, l_target_dbc_hz / 20.0) * delta_f_hz / k_push_hz_per_v;
}

std::complex<double> open_loop_gain(const LoopFilterParams& f, double icp_a, double kvco_hz_per_v, double n_total,
                                    double f_hz)
{
    const double w = 2.0 * kPi * f_hz;
    const std::complex<double> s(0.0, w);
    return (icp_a / (2.0 * kPi)) * filter_impedance(f, w) * (2.0 * kPi * kvco_hz_per_v / s) / n_total;
}

LoopCheck check_loop(const LoopFilterParams& f, const FilterDesignSpec& spec)
{
    const auto g = open_loop_gain(f, spec.icp_a, spec.kvco_hz_per_v, spec.n_total, spec.f_c_hz);
    return {std::abs(g), 180.0 + std::arg(g) * 180.0 / kPi};
}

FilterDesign design_loop_filter(const FilterDesignSpec& spec)
{
    require_positive(spec.icp_a, "icp");
    require_positive(spec.kvco_hz_per_v, "kvco");
    require_positive(spec.n_total, "n_total");
    require_positive(spec.f_c_hz, "f_c");
    require_positive(spec.f_ref_hz, "f_ref");
    if (spec.f_c_hz >= spec.f_ref_hz / 10.0) throw DesignError("crossover must be below f_ref/10");
    if (!(spec.phase_margin_deg >= 30.0 && spec.phase_margin_deg <= 80.0))
        throw DesignError("phase margin " + std::to_string(spec.phase_margin_deg) +
                          " deg is outside the 30-80 deg range of a second-order passive filter");

    // Zero and pole placed geometrically around wc so the phase lead peaks there:
    // tz/tp = b^2 with b = tan(pm) + sec(pm).
    const double pm = spec.phase_margin_deg * kPi / 180.0;
    const double b = std::tan(pm) + 1.0 / std::cos(pm);
    const double wc = 2.0 * kPi * spec.f_c_hz;
    const double tz = b / wc;
    const double c_tot = spec.icp_a * spec.kvco_hz_per_v * b / (spec.n_total * wc * wc);

    FilterDesign d;
    d.filter.c2_f = c_tot / (b * b);
    d.filter.c1_f = c_tot - d.filter.c2_f;
    d.filter.rz_ohm = tz / d.filter.c1_f;
    d.check = check_loop(d.filter, spec);

    if (std::abs(d.check.gain_at_fc - 1.0) > 0.01 || std::abs(d.check.phase_margin_deg - spec.phase_margin_deg) > 1.0)
        throw DesignError("synthesized filter failed the crossover check");
    return d;
}

double closed_loop_bandwidth(const LoopFilterParams& f, double icp_a, double kvco_hz_per_v, double n_total)
{
    auto mag2 = [&](double hz) {
        const auto g = open_loop_gain(f, icp_a, kvco_hz_per_v, n_total, hz);
        return std::norm(g / (1.0 + g));
    };
    // Walk up in small log steps past the peaking, then bisect the first
    // downward crossing of 1/2.
    double lo = 1.0, hi = lo;
    for (;;) {
        hi = lo * 1.01;
        if (mag2(hi) < 0.5) break;
        lo = hi;
        if (lo > 1e12) throw DesignError("closed loop has no -3 dB point");
    }
    for (int i = 0; i < 100; ++i) {
        const double mid = std::sqrt(lo * hi);
        (mag2(mid) < 0.5 ? hi : lo) = mid;
    }
    return std::sqrt(lo * hi);
}

}  // namespace fsynth
