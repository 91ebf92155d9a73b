#include <doctest.h>

#include <cmath>

#include "fsynth/analysis.hpp"
#include "fsynth/engine.hpp"
#include "fsynth/progif.hpp"
#include "fsynth/random.hpp"

using namespace fsynth;

TEST_SUITE("progif")
{
    TEST_CASE("40 MHz to 1.92 GHz and 480 MHz")
    {
        const auto p = plan({40e6, 1.92e9, 480e6});
        CHECK(p.np_plus_s == 48);
        CHECK(p.p == 24);
        CHECK(p.s == 0);
        CHECK(p.f_vco_hz == doctest::Approx(7.68e9));
        CHECK(total_ratio(p.outdiv_a) == 2);
        REQUIRE(p.outdiv_b);
        CHECK(total_ratio(*p.outdiv_b) == 8);
        CHECK(p.exact);
        CHECK(p.error_ppm_a == 0.0);
        CHECK(p.band_hint == band_search(7.68e9, VcoParams{}, 1.2));
    }

    TEST_CASE("an output equal to the quadrature rail bypasses the divider")
    {
        const auto p = plan({50e6, 3.6e9, std::nullopt});
        CHECK(total_ratio(p.outdiv_a) == 1);
        CHECK(p.np_plus_s == 36);
        CHECK(p.exact);
        CHECK_FALSE(p.outdiv_b);
    }

    TEST_CASE("infeasible requests")
    {
        CHECK_THROWS_AS(plan({40e6, 1.0, std::nullopt}), PlanError);
        CHECK_THROWS_AS(plan({40e6, 5e9, std::nullopt}), PlanError);
        CHECK_THROWS_AS(plan({5e9, 1e9, std::nullopt}), PlanError);
        CHECK_THROWS_AS(plan({-1.0, 1e9, std::nullopt}), PlanError);
    }

    TEST_CASE("swallow count is kept minimal")
    {
        const auto p = plan({50e6, 3.7e9, std::nullopt});  // np+s = 37
        CHECK(p.np_plus_s == 37);
        CHECK(p.s == 1);
        CHECK(p.p == 18);
    }

    TEST_CASE("random reachable targets plan exactly")
    {
        RandomStream rng(17, "planner");
        const auto ratios = outdiv_available_ratios();
        const VcoParams vco;
        int tried = 0;
        while (tried < 500) {
            const double f_ref = 10e6 + std::floor(rng.uniform() * 91) * 1e6;
            const int lo = std::max(2, static_cast<int>(std::ceil(vco.f_min_hz / (4 * f_ref))));
            const int hi = std::min(141, static_cast<int>(std::floor(vco.f_max_hz / (4 * f_ref))));
            if (lo > hi) continue;
            const int k = lo + static_cast<int>(rng.uniform() * (hi - lo + 1));
            const int ra = ratios[static_cast<std::size_t>(rng.uniform() * ratios.size())];
            const int rb = ratios[static_cast<std::size_t>(rng.uniform() * ratios.size())];
            const double fa = 2 * f_ref * k / ra;
            const double fb = 2 * f_ref * k / rb;
            const auto p = plan({f_ref, fa, fb});
            ++tried;
            CAPTURE(f_ref);
            CAPTURE(k);
            CAPTURE(ra);
            CAPTURE(rb);
            REQUIRE(p.exact);
            CHECK(p.f_out_a_hz == doctest::Approx(fa).epsilon(1e-12));
            REQUIRE(p.f_out_b_hz);
            CHECK(*p.f_out_b_hz == doctest::Approx(fb).epsilon(1e-12));
            CHECK(2 * f_ref * p.np_plus_s / total_ratio(p.outdiv_a) == doctest::Approx(fa).epsilon(1e-12));
            CHECK(p.f_vco_hz == doctest::Approx(4 * f_ref * p.np_plus_s));
            CHECK(p.f_vco_hz >= vco.f_min_hz);
            CHECK(p.f_vco_hz <= vco.f_max_hz);
            CHECK(2 * p.p + p.s == p.np_plus_s);
            CHECK(check_feedback_divider({2, p.p, p.s}).empty());
        }
    }

    TEST_CASE("unreachable targets fall back to the smallest error")
    {
        const auto p = plan({40e6, 1.9e9, std::nullopt});
        CHECK_FALSE(p.exact);
        CHECK(std::abs(p.error_ppm_a) < 2e4);
        CHECK(p.f_out_a_hz == doctest::Approx(2 * 40e6 * p.np_plus_s / total_ratio(p.outdiv_a)));
    }

    TEST_CASE("field packing")
    {
        RegisterSettings s;
        s.p = 23;
        s.s = 2;
        s.cp_dac = 31;
        const auto tx = encode(s);
        REQUIRE(tx.size() == 7);
        for (std::size_t i = 0; i < tx.size(); ++i) CHECK(tx[i].address == i);
        CHECK(tx[0].value == 0x17);
        CHECK(tx[1].value == 0x02);
        CHECK(tx[5].value == 0x1F);
        CHECK(tx[2].value == 0x10);  // auto band
        s.cp_dac = 32;
        CHECK_THROWS_AS(encode(s), RegisterError);
        s.cp_dac = 0;
        s.p = 64;
        CHECK_THROWS_AS(encode(s), RegisterError);
    }

    TEST_CASE("the 40 MHz plan as register writes")
    {
        const auto e = encode(plan({40e6, 1.92e9, 480e6}));
        CHECK(to_hex_lines(e.transactions) == "00=18\n01=00\n02=12\n03=20\n04=26\n05=10\n06=10\n");
        const auto back = parse_hex_lines(to_hex_lines(e.transactions));
        REQUIRE(back.size() == e.transactions.size());
        for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i].value == e.transactions[i].value);
        CHECK_THROWS_AS(parse_hex_lines("zz=01\n"), RegisterError);
    }

    TEST_CASE("decode inverts encode over every valid field value")
    {
        auto round = [](const RegisterSettings& s) {
            RegisterFile r;
            r.apply(encode(s));
            return decode(r) == s;
        };
        int bad = 0;
        for (int p = 1; p <= 63; ++p)
            for (int s = 0; s <= std::min(p, 15); ++s) {
                RegisterSettings x;
                x.p = p;
                x.s = s;
                if (!round(x)) ++bad;
            }
        for (int band = 0; band <= 15; ++band)
            for (bool a : {false, true}) {
                RegisterSettings x;
                x.band = band;
                x.auto_band = a;
                if (!round(x)) ++bad;
            }
        for (int c = 0; c <= 31; ++c)
            for (int b = 0; b <= 31; ++b) {
                RegisterSettings x;
                x.cp_dac = c;
                x.vco_bias_dac = b;
                if (!round(x)) ++bad;
            }
        const auto& sets = default_stage_sets();
        for (int code = 0; code < 64; ++code) {
            const auto cfg = decode_stage_code(static_cast<std::uint8_t>(code), sets);
            CHECK(encode_stage_code(cfg, sets) == code);
            RegisterSettings x;
            x.outdiv_a = cfg;
            x.outdiv_b = decode_stage_code(static_cast<std::uint8_t>(63 - code), sets);
            if (!round(x)) ++bad;
        }
        CHECK(bad == 0);
    }

    TEST_CASE("register file access rules")
    {
        RegisterFile r;
        r.write(0x07, 0xFF);
        CHECK(r.read(0x07) == 0);
        r.write(0x01, 0xFF);
        CHECK(r.read(0x01) == 0x0F);
        for (std::uint8_t a = 0; a < 7; ++a) {
            r.write(a, 0x05);
            CHECK(r.read(a) == (0x05 & register_mask(a)));
        }
        CHECK(register_mask(0x07) == 0);
        CHECK_THROWS_AS(r.write(0x08, 1), RegisterError);
        CHECK_THROWS_AS(r.read(0x08), RegisterError);
    }

    TEST_CASE("status reflects an attached locked simulation")
    {
        const auto tr = simulate(PllConfig{});
        REQUIRE(tr.summary.locked_at_end);
        RegisterFile r;
        CHECK((r.read(RegisterFile::kStatus) & 1) == 0);
        r.attach([&] { return tr.summary.locked_at_end; });
        CHECK((r.read(RegisterFile::kStatus) & 1) == 1);
        r.detach();
        CHECK((r.read(RegisterFile::kStatus) & 1) == 0);
    }

    TEST_CASE("programmed settings drive the simulation to the planned outputs")
    {
        const auto p = plan({40e6, 1.92e9, 480e6});
        const auto e = encode(p);
        PllConfig base;
        base.f_ref_hz = 40e6;
        auto cfg = apply_settings(decode(e.regs), base);
        CHECK(cfg.fbdiv.p == 24);
        CHECK(cfg.cp.icp_a == doctest::Approx(10e-6));
        CHECK(cfg.f_vco_target() == doctest::Approx(7.68e9));
        const auto direct = config_from_plan(p);
        CHECK(direct.fbdiv.p == cfg.fbdiv.p);
        CHECK(total_ratio(direct.outdiv_b) == 8);

        cfg.sim.duration_s = 200e-6;
        cfg.sim.record_edges = {{Signal::OutA, 1}, {Signal::OutB, 1}};
        const auto tr = simulate(cfg);
        REQUIRE(tr.summary.locked_at_end);
        const auto a = tie(tr.stream(Signal::OutA).after(120e-6).only(Polarity::Rising));
        const auto b = tie(tr.stream(Signal::OutB).after(120e-6).only(Polarity::Rising));
        // rising-edge indices step by 2 (both polarities are counted)
        CHECK(1.0 / (2 * a.period_s) == doctest::Approx(1.92e9).epsilon(1e-7));
        CHECK(1.0 / (2 * b.period_s) == doctest::Approx(480e6).epsilon(1e-7));
    }
}
