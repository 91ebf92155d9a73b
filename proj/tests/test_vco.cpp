#include <doctest.h>

#include <cmath>
#include <limits>

#include "fsynth/random.hpp"
#include "fsynth/vco.hpp"

using namespace fsynth;

TEST_SUITE("vco")
{
    TEST_CASE("band centre at mid control voltage")
    {
        VcoParams p;
        p.f_min_hz = 5.8e9;  // 350 MHz steps put band 4 on 7.2 GHz
        CHECK(band_frequency(4, p) == doctest::Approx(7.2e9));
        CHECK(vco_frequency(4, p.v_mid_v, 0.0, p) == doctest::Approx(7.2e9));
    }

    TEST_CASE("band end-points")
    {
        VcoParams p;
        CHECK(band_frequency(0, p) == 8.6e9);
        CHECK(band_frequency(8, p) == doctest::Approx(5.6e9));
        CHECK_THROWS_AS(band_frequency(9, p), VcoError);
        CHECK_THROWS_AS(band_frequency(-1, p), VcoError);
    }

    TEST_CASE("control gain is 0.6 GHz/V in every band")
    {
        VcoParams p;
        for (int b = 0; b <= p.n_caps; ++b) {
            const double df = vco_frequency(b, 0.61, 0.0, p) - vco_frequency(b, 0.59, 0.0, p);
            CHECK(df / 0.02 == doctest::Approx(0.6e9).epsilon(1e-6));
        }
    }

    TEST_CASE("supply pushing: +10 mV on VDDL gives +3.8 MHz")
    {
        VcoParams p;
        const double f0 = vco_frequency(3, 0.6, 0.0, p);
        CHECK(vco_frequency(3, 0.6, 10e-3, p) - f0 == doctest::Approx(3.8e6).epsilon(1e-6));
    }

    TEST_CASE("frequency is affine in v_ctrl and v_ddl_dev")
    {
        VcoParams p;
        for (double v : {0.2, 0.5, 0.9}) {
            for (double h : {1e-3, 1e-2}) {
                const double a = vco_frequency(5, v + h, 0.0, p) - vco_frequency(5, v, 0.0, p);
                const double b = vco_frequency(5, v, 0.003 + h, p) - vco_frequency(5, v, 0.003, p);
                CHECK(a / h == doctest::Approx(p.kvco_hz_per_v).epsilon(1e-6));
                CHECK(b / h == doctest::Approx(p.kvddl_hz_per_v).epsilon(1e-6));
            }
        }
    }

    TEST_CASE("8 GHz with zero jitter gives a 125 ps period")
    {
        VcoParams p;
        const int band = 2;
        const double v = lock_vctrl(band, 8e9, p);
        const double tick = 1.0 / 8e9;
        VcoState s;
        s.band = band;
        const auto e1 = vco_next_edge(s, v, 0.0, p, 0.0, tick);
        const auto e2 = vco_next_edge(e1.state, v, 0.0, p, 0.0, tick);
        CHECK(seconds_between(e2.edge.time, e1.edge.time, tick) == doctest::Approx(125e-12).epsilon(1e-12));
        CHECK(e1.state.cycles == 1);
        CHECK(e2.state.cycles == 2);
        CHECK(e2.edge.signal == Signal::Vco);
        CHECK(e2.edge.polarity == Polarity::Rising);
    }

    TEST_CASE("period spread equals the injected jitter sigma")
    {
        VcoParams p;
        const double sigma = 1e-12;
        const double tick = 1.0 / 7.68e9;
        const int band = band_search(7.68e9, p, 1.2);
        const double v = lock_vctrl(band, 7.68e9, p);
        RandomStream rng(11, "vco-test");
        VcoState s;
        s.band = band;
        Timestamp prev = s.last_update;
        double sum = 0.0, sum2 = 0.0;
        const int n = 1000000;
        for (int k = 0; k < n; ++k) {
            const auto e = vco_next_edge(s, v, 0.0, p, sigma * rng.gaussian(), tick);
            const double per = seconds_between(e.edge.time, prev, tick) - tick;
            sum += per;
            sum2 += per * per;
            prev = e.edge.time;
            s = e.state;
        }
        const double mean = sum / n;
        const double sd = std::sqrt(sum2 / n - mean * mean);
        CHECK(sd == doctest::Approx(sigma).epsilon(0.01));
        CHECK(s.cycles == n);
    }

    TEST_CASE("band search")
    {
        VcoParams p;
        CHECK(band_search(8.6e9, p, 1.2) == 0);
        CHECK(band_search(5.6e9, p, 1.2) == 8);

        int best = -1;
        double err = std::numeric_limits<double>::infinity();
        for (int b = 0; b <= 8; ++b) {
            const double f = 8.6e9 - b * (3e9 / 8);
            if (std::abs(f - 7.68e9) < err) {
                err = std::abs(f - 7.68e9);
                best = b;
            }
        }
        CHECK(band_search(7.68e9, p, 1.2) == best);
        const double v = lock_vctrl(best, 7.68e9, p);
        CHECK(v > 0.12);
        CHECK(v < 1.08);
        CHECK_THROWS_AS(band_search(12e9, p, 1.2), VcoError);
    }

    TEST_CASE("band centres strictly decrease")
    {
        VcoParams p;
        for (int b = 1; b <= p.n_caps; ++b) CHECK(band_frequency(b, p) < band_frequency(b - 1, p));
    }

    TEST_CASE("fine-tuning spans cover the whole range on a 1 MHz grid")
    {
        VcoParams p;
        const double half = band_span(p) / 2;
        int gaps = 0;
        for (double f = p.f_min_hz; f <= p.f_max_hz; f += 1e6) {
            bool covered = false;
            for (int b = 0; b <= p.n_caps && !covered; ++b) covered = std::abs(f - band_frequency(b, p)) <= half;
            if (!covered) ++gaps;
            else if (band_search(f, p, 1.2) < 0) ++gaps;
        }
        CHECK(gaps == 0);
    }
}
