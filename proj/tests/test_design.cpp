#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "fsynth/analysis.hpp"
#include "fsynth/design.hpp"
#include "fsynth/engine.hpp"

using namespace fsynth;

namespace {

constexpr double kPi = std::numbers::pi;

/// Open-loop gain evaluated from the network impedance, written out independently.
std::complex<double> g_ref(const LoopFilterParams& f, double icp, double kvco, double n, double hz)
{
    const std::complex<double> s(0, 2 * kPi * hz);
    const std::complex<double> zc1 = 1.0 / (s * f.c1_f);
    const std::complex<double> zc2 = 1.0 / (s * f.c2_f);
    const std::complex<double> series = f.rz_ohm + zc1;
    const std::complex<double> z = series * zc2 / (series + zc2);
    return icp / (2 * kPi) * z * (2 * kPi * kvco / s) / n;
}

}  // namespace

TEST_SUITE("design")
{
    TEST_CASE("spur amplitude")
    {
        const auto a = spur_amplitude(380e6, 1e-3, 1e6);
        CHECK(a.level_dbc == doctest::Approx(-14.42).epsilon(0.0005));
        CHECK(a.modulation_index == doctest::Approx(0.38));
        CHECK(a.narrowband);
        CHECK(spur_amplitude(380e6, 10e-3, 10e6).level_dbc == doctest::Approx(a.level_dbc));
        CHECK(spur_amplitude(380e6, 0.1e-3, 1e6).level_dbc - a.level_dbc == doctest::Approx(-20.0));
        CHECK_FALSE(spur_amplitude(380e6, 5e-3, 1e6).narrowband);
        CHECK_THROWS_AS(spur_amplitude(380e6, 0.0, 1e6), DesignError);
        CHECK_THROWS_AS(spur_amplitude(380e6, 1e-3, -1.0), DesignError);
    }

    TEST_CASE("required PSRR")
    {
        const auto r = required_psrr(10e-3, 10e6, 380e6, -60.0);
        CHECK(r.psrr_db == doctest::Approx(45.58).epsilon(0.0005));
        CHECK_FALSE(r.already_compliant);
        // the attenuated ripple lands exactly on the target
        CHECK(spur_amplitude(380e6, 10e-3 * std::pow(10.0, -r.psrr_db / 20), 10e6).level_dbc ==
              doctest::Approx(-60.0).epsilon(1e-12));
        CHECK(spur_amplitude(380e6, r.v_allowed_v, 10e6).level_dbc == doctest::Approx(-60.0).epsilon(1e-12));

        const auto edge = required_psrr(r.v_allowed_v, 10e6, 380e6, -60.0);
        CHECK(edge.psrr_db == doctest::Approx(0.0).epsilon(1e-9));
        const auto lower = required_psrr(10e-3, 10e6, 380e6, -80.0);
        CHECK(lower.psrr_db - r.psrr_db == doctest::Approx(20.0));
        const auto easy = required_psrr(1e-6, 10e6, 380e6, -60.0);
        CHECK(easy.already_compliant);
        CHECK(easy.psrr_db == 0.0);
        // with the core-supply pushing gain instead
        CHECK(required_psrr(10e-3, 10e6, 48e6, -60.0).psrr_db == doctest::Approx(27.6).epsilon(0.002));
    }

    TEST_CASE("supply-induced phase noise")
    {
        CHECK(supply_pn(8.32e-9, 380e6, 1e6) == doctest::Approx(-110.0).epsilon(0.0005));
        CHECK(supply_pn(7.0e-9, 380e6, 1e6) == doctest::Approx(-111.5).epsilon(0.0005));
        CHECK(supply_pn(7.0e-9, 380e6, 2e6) - supply_pn(7.0e-9, 380e6, 1e6) ==
              doctest::Approx(-20 * std::log10(2.0)));
        CHECK(max_supply_noise(-110.0, 380e6, 1e6) == doctest::Approx(8.32e-9).epsilon(0.001));
        CHECK(max_supply_noise(-110.0 - 20 * std::log10(2.0), 380e6, 1e6) ==
              doctest::Approx(max_supply_noise(-110.0, 380e6, 1e6) / 2));
        for (double l : {-90.0, -110.0, -131.7})
            CHECK(supply_pn(max_supply_noise(l, 380e6, 1e6), 380e6, 1e6) == doctest::Approx(l).epsilon(1e-12));
        CHECK_THROWS_AS(supply_pn(0.0, 380e6, 1e6), DesignError);
        CHECK_THROWS_AS(max_supply_noise(-110.0, 0.0, 1e6), DesignError);
    }

    TEST_CASE("published worked values are kept for cross-checks")
    {
        CHECK(published::kPsrrDb == 36.0);
        CHECK(published::kMaxSupplyNoiseVRtHz == 7.0e-9);
        CHECK(published::kDMin == 0.059);
    }

    TEST_CASE("default loop filter meets the crossover and phase-margin contract")
    {
        const FilterDesignSpec spec;
        const auto d = design_loop_filter(spec);
        const auto g = g_ref(d.filter, spec.icp_a, spec.kvco_hz_per_v, spec.n_total, spec.f_c_hz);
        CHECK(std::abs(g) == doctest::Approx(1.0).epsilon(0.01));
        CHECK(180.0 + std::arg(g) * 180 / kPi == doctest::Approx(55.0).epsilon(1.0 / 55));
        CHECK(d.check.gain_at_fc == doctest::Approx(std::abs(g)).epsilon(1e-9));
        CHECK(d.filter.c2_f < d.filter.c1_f);
        CHECK(d.filter.rz_ohm == doctest::Approx(38511.77).epsilon(1e-5));
        CHECK(d.filter.c1_f == doctest::Approx(56.987e-12).epsilon(1e-4));
        CHECK(d.filter.c2_f == doctest::Approx(6.2907e-12).epsilon(1e-4));
        CHECK(std::abs(open_loop_gain(d.filter, spec.icp_a, spec.kvco_hz_per_v, spec.n_total, 1e5) -
                       g_ref(d.filter, spec.icp_a, spec.kvco_hz_per_v, spec.n_total, 1e5)) < 1e-9);
    }

    TEST_CASE("closed-loop bandwidth matches a direct scan")
    {
        const FilterDesignSpec spec;
        const auto d = design_loop_filter(spec);
        double f = 1e3;
        while (std::abs(g_ref(d.filter, spec.icp_a, spec.kvco_hz_per_v, spec.n_total, f) /
                        (1.0 + g_ref(d.filter, spec.icp_a, spec.kvco_hz_per_v, spec.n_total, f))) >= std::sqrt(0.5))
            f *= 1.0001;
        CHECK(closed_loop_bandwidth(d.filter, spec.icp_a, spec.kvco_hz_per_v, spec.n_total) ==
              doctest::Approx(f).epsilon(2e-4));
    }

    TEST_CASE("design contract holds across margins and bandwidths")
    {
        for (double pm : {30.0, 45.0, 55.0, 70.0, 80.0}) {
            for (double fc : {50e3, 230e3, 1e6}) {
                FilterDesignSpec spec;
                spec.phase_margin_deg = pm;
                spec.f_c_hz = fc;
                const auto d = design_loop_filter(spec);
                const auto g = g_ref(d.filter, spec.icp_a, spec.kvco_hz_per_v, spec.n_total, fc);
                CAPTURE(pm);
                CAPTURE(fc);
                CHECK(std::abs(g) == doctest::Approx(1.0).epsilon(0.01));
                CHECK(std::abs(180.0 + std::arg(g) * 180 / kPi - pm) < 1.0);
                CHECK(d.filter.c2_f < d.filter.c1_f);
            }
        }
    }

    TEST_CASE("doubling the crossover halves the zero time constant")
    {
        FilterDesignSpec spec;
        const auto a = design_loop_filter(spec);
        spec.f_c_hz *= 2;
        const auto b = design_loop_filter(spec);
        CHECK(b.filter.rz_ohm * b.filter.c1_f == doctest::Approx(0.5 * a.filter.rz_ohm * a.filter.c1_f).epsilon(1e-12));
    }

    TEST_CASE("infeasible designs are rejected")
    {
        FilterDesignSpec spec;
        spec.phase_margin_deg = 89.0;
        CHECK_THROWS_AS(design_loop_filter(spec), DesignError);
        spec.phase_margin_deg = 20.0;
        CHECK_THROWS_AS(design_loop_filter(spec), DesignError);
        spec = {};
        spec.f_c_hz = 5e6;
        CHECK_THROWS_AS(design_loop_filter(spec), DesignError);
        spec = {};
        spec.icp_a = 0.0;
        CHECK_THROWS_AS(design_loop_filter(spec), DesignError);
    }

    TEST_CASE("a synthesized filter locks in simulation")
    {
        FilterDesignSpec spec;
        spec.f_c_hz = 150e3;
        spec.phase_margin_deg = 65.0;
        PllConfig cfg;
        cfg.filter = design_loop_filter(spec).filter;
        cfg.sim.duration_s = 250e-6;
        const auto tr = simulate(cfg);
        CHECK(tr.summary.locked_at_end);
        CHECK(std::abs(tr.summary.final_freq_error) < 1e-7);
    }

    TEST_CASE("simulated ripple spurs follow the sideband formula within 2 dB")
    {
        for (double vm : {0.25e-3, 0.5e-3, 1e-3}) {
            for (double fm : {1e6, 2e6, 4e6}) {
                const auto est = spur_amplitude(380e6, vm, fm);
                if (!est.narrowband) continue;
                PllConfig cfg;
                cfg.noise.ripple = SupplyRipple{vm, fm};
                cfg.sim.duration_s = 250e-6;
                cfg.sim.record_edges = {{Signal::Vco, 8}};
                const auto tr = simulate(cfg);
                const auto m = spur_level(tr.stream(Signal::Vco).after(100e-6), cfg.f_vco_target(), fm);
                CAPTURE(vm);
                CAPTURE(fm);
                CHECK(m.resolved);
                CHECK(std::abs(m.level_dbc - est.level_dbc) < 2.0);
            }
        }
    }
}
