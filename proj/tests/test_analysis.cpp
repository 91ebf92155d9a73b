#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "fsynth/analysis.hpp"
#include "fsynth/engine.hpp"
#include "fsynth/random.hpp"

using namespace fsynth;

namespace {

constexpr double kPi = std::numbers::pi;

/// Rising-only clock with per-edge displacement d(k, t_ideal).
template <class F>
EdgeStream clock(double f0, std::int64_t n, F&& displacement, double tick = 0.0)
{
    if (tick == 0.0) tick = 1.0 / f0;
    EdgeStream s{Signal::OutA, tick, {}};
    s.edges.reserve(static_cast<std::size_t>(n));
    const double per = 1.0 / f0;
    for (std::int64_t k = 0; k < n; ++k) {
        const double ideal = static_cast<double>(k) * per;
        const auto base = Timestamp::from_seconds(ideal, tick);
        s.edges.push_back({k, Polarity::Rising, advance(base, displacement(k, ideal))});
    }
    return s;
}

/// White-FM clock: the edge-time error is a random walk of per-cycle sigma.
EdgeStream white_fm(double f0, double duration, double sigma, std::uint64_t seed, const char* label = "wfm")
{
    RandomStream rng(seed, label);
    double walk = 0.0;
    return clock(f0, static_cast<std::int64_t>(duration * f0), [&](std::int64_t, double) {
        const double v = walk;
        walk += sigma * rng.gaussian();
        return v;
    });
}

TieSeries synthetic_tie(std::size_t n, double dj, double rj, bool alternate, std::uint64_t seed)
{
    RandomStream rng(seed, "tie");
    RandomStream pick(seed, "labels");
    TieSeries t;
    t.period_s = 1.0 / 1.92e9;
    for (std::size_t i = 0; i < n; ++i) {
        const bool high = alternate ? (i % 2 == 1) : pick.uniform() < 0.5;
        t.index.push_back(static_cast<std::int64_t>(i));
        t.residual_s.push_back((high ? 0.5 : -0.5) * dj + rj * rng.gaussian());
    }
    return t;
}

}  // namespace

TEST_SUITE("analysis")
{
    TEST_CASE("TIE of a uniform clock is zero")
    {
        const auto s = clock(1.9e9, 200000, [](std::int64_t, double) { return 0.0; }, 1 / 7.68e9);
        const auto t = tie(s);
        double worst = 0.0;
        for (double r : t.residual_s) worst = std::max(worst, std::abs(r));
        CHECK(worst <= 1e-15);
        CHECK(t.period_s == doctest::Approx(1 / 1.9e9).epsilon(1e-12));
        CHECK(std::abs(t.offset_s) < 1e-15);
    }

    TEST_CASE("a single displaced edge keeps its displacement less the OLS leverage")
    {
        const std::int64_t n = 1000;
        const std::int64_t j = 300;
        const double d = 1e-12;
        const auto s = clock(1e9, n, [&](std::int64_t k, double) { return k == j ? d : 0.0; });
        const auto t = tie(s);
        const double mk = (n - 1) / 2.0;
        double skk = 0.0;
        for (std::int64_t k = 0; k < n; ++k) skk += (k - mk) * (k - mk);
        const double expect = d * (1.0 - 1.0 / n - (j - mk) * (j - mk) / skk);
        CHECK(t.residual_s[j] == doctest::Approx(expect).epsilon(1e-6));
        CHECK(t.residual_s[j] == doctest::Approx(d).epsilon(0.01));
    }

    TEST_CASE("Gaussian jitter of 880 fs is recovered within 2%")
    {
        RandomStream rng(21, "tie880");
        const auto s = clock(1.92e9, 100000, [&](std::int64_t, double) { return 880e-15 * rng.gaussian(); });
        const auto t = tie(s);
        CHECK(rms(t.residual_s) == doctest::Approx(880e-15).epsilon(0.02));
        const double mean = std::accumulate(t.residual_s.begin(), t.residual_s.end(), 0.0) / t.residual_s.size();
        CHECK(std::abs(mean) < 1e-20);
    }

    TEST_CASE("TIE is invariant under a global time shift")
    {
        RandomStream rng(4, "shift");
        std::vector<double> d(5000);
        for (auto& v : d) v = 1e-12 * rng.gaussian();
        const auto a = tie(clock(1e9, 5000, [&](std::int64_t k, double) { return d[k]; }));
        auto shifted = clock(1e9, 5000, [&](std::int64_t k, double) { return d[k] + 1.234567e-6; });
        const auto b = tie(shifted);
        for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(a.residual_s[i] - b.residual_s[i]) < 1e-19);
        CHECK(b.offset_s - a.offset_s == doctest::Approx(1.234567e-6).epsilon(1e-9));
    }

    TEST_CASE("TIE needs 100 edges")
    {
        const auto s = clock(1e9, 99, [](std::int64_t, double) { return 0.0; });
        CHECK_THROWS_AS(tie(s), InsufficientRecord);
    }

    TEST_CASE("decomposition recovers alternate-edge dj and rj across the grid")
    {
        const double rj = 560e-15;
        for (double ratio : {0.5, 3.0, 10.0}) {
            for (std::size_t n : {std::size_t{10000}, std::size_t{100000}, std::size_t{1000000}}) {
                const auto d = decompose(synthetic_tie(n, ratio * rj, rj, true, 7));
                CAPTURE(ratio);
                CAPTURE(n);
                CHECK(d.model == JitterModel::Bimodal);
                CHECK(d.dj_s == doctest::Approx(ratio * rj).epsilon(0.10));
                CHECK(d.rj_s == doctest::Approx(rj).epsilon(0.10));
            }
        }
    }

    TEST_CASE("3.13 ps / 560 fs scenario")
    {
        const auto d = decompose(synthetic_tie(100000, 3.13e-12, 560e-15, true, 9));
        CHECK(d.dj_s == doctest::Approx(3.13e-12).epsilon(0.10));
        CHECK(d.rj_s == doctest::Approx(560e-15).epsilon(0.10));
        CHECK(d.method == "alternate-edge");
    }

    TEST_CASE("unlabeled mixtures are found by EM")
    {
        const double rj = 560e-15;
        const auto wide = decompose(synthetic_tie(100000, 10 * rj, rj, false, 3));
        CHECK(wide.model == JitterModel::Bimodal);
        CHECK(wide.method == "mixture");
        CHECK(wide.dj_s == doctest::Approx(10 * rj).epsilon(0.02));
        CHECK(wide.rj_s == doctest::Approx(rj).epsilon(0.05));

        const auto mid = decompose(synthetic_tie(100000, 3 * rj, rj, false, 3));
        CHECK(mid.model == JitterModel::Bimodal);
        CHECK(mid.dj_s == doctest::Approx(3 * rj).epsilon(0.10));
        CHECK(mid.rj_s == doctest::Approx(rj).epsilon(0.10));
    }

    TEST_CASE("pure Gaussian reads as unimodal")
    {
        const auto d = decompose(synthetic_tie(100000, 0.0, 700e-15, false, 5));
        CHECK(d.model == JitterModel::Unimodal);
        CHECK(d.dj_s == 0.0);
        CHECK(d.rj_s == doctest::Approx(700e-15).epsilon(0.05));
        CHECK(d.ll_threshold == doctest::Approx(0.5 * std::log(100000.0)));
    }

    TEST_CASE("decomposition preconditions")
    {
        CHECK_THROWS_AS(decompose(synthetic_tie(9999, 0.0, 1e-12, false, 1)), InsufficientRecord);
        CHECK_THROWS_AS(decompose(synthetic_tie(20000, 0.0, 0.0, false, 1)), AnalysisError);
    }

    TEST_CASE("instrument floor subtraction")
    {
        CHECK(subtract_floor(880e-15, 540e-15) == doctest::Approx(694.8e-15).epsilon(1e-4));
        CHECK(subtract_floor(3e-12, 0.0) == 3e-12);
        CHECK(subtract_floor(3e-12, 3e-12) == 0.0);
        CHECK_THROWS_WITH_AS(subtract_floor(1e-12, 2e-12), "floor exceeds measurement", AnalysisError);
    }

    TEST_CASE("narrowband PM tone reads 20 log10(beta/2)")
    {
        const double f0 = 480e6, fm = 1e6;
        for (double beta : {0.01, 0.005}) {
            const double amp = beta / (2 * kPi * f0);
            const auto s = clock(f0, static_cast<std::int64_t>(1e-3 * f0),
                                 [&](std::int64_t, double t) { return amp * std::sin(2 * kPi * fm * t); });
            const auto m = spur_level(s, f0, fm);
            CAPTURE(beta);
            CHECK(m.resolved);
            CHECK(m.level_dbc == doctest::Approx(20 * std::log10(beta / 2)).epsilon(0.5 / 46.0));
        }
    }

    TEST_CASE("halving the tone lowers the spur by 6 dB")
    {
        const double f0 = 480e6, fm = 1e6;
        auto level = [&](double beta) {
            const double amp = beta / (2 * kPi * f0);
            return spur_level(clock(f0, static_cast<std::int64_t>(1e-3 * f0),
                                    [&](std::int64_t, double t) { return amp * std::sin(2 * kPi * fm * t); }),
                              f0, fm)
                .level_dbc;
        };
        CHECK(level(0.02) - level(0.01) == doctest::Approx(6.02).epsilon(0.5 / 6.02));
    }

    TEST_CASE("noise without a tone is flagged as a floor bound")
    {
        const double f0 = 480e6;
        const auto s = white_fm(f0, 1e-3, 2e-15, 8);
        const auto m = spur_level(s, f0, 1e6);
        CHECK_FALSE(m.resolved);
    }

    TEST_CASE("white-FM PSD falls at 20 dB per decade")
    {
        const double f0 = 480e6;
        const double sigma = std::pow(10.0, -110.0 / 20) * 1e6 / std::pow(f0, 1.5);
        PsdOptions o;
        o.f_low_hz = 100e3;
        o.f_high_hz = 5e6;
        const auto p = pn_psd(white_fm(f0, 1.2e-3, sigma, 4), f0, o);
        CHECK(p.level_at(1e6) == doctest::Approx(-110.0).epsilon(1.0 / 110));
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& pt : p.report) {
            const double x = std::log10(pt.f_hz);
            sx += x;
            sy += pt.l_dbc_hz;
            sxx += x * x;
            sxy += x * pt.l_dbc_hz;
        }
        const double n = static_cast<double>(p.report.size());
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        CHECK(slope == doctest::Approx(-20.0).epsilon(0.05));
        for (std::size_t i = 1; i < p.report.size(); ++i) CHECK(p.report[i].f_hz > p.report[i - 1].f_hz);
        CHECK(p.report.front().f_hz == doctest::Approx(100e3));
        CHECK(p.report.back().f_hz <= 5e6 * 1.0001);
        CHECK(p.segments >= 8);
    }

    TEST_CASE("Parseval: integrated PSD equals the phase variance")
    {
        RandomStream rng(6, "parseval");
        const double fs = 1e6, sd = 0.01;
        std::vector<double> ph(400000);
        double mean = 0.0, var = 0.0;
        for (auto& v : ph) v = sd * rng.gaussian();
        for (double v : ph) mean += v;
        mean /= ph.size();
        for (double v : ph) var += (v - mean) * (v - mean);
        var /= ph.size();
        PsdOptions o;
        o.f_low_hz = 1e3;
        o.f_high_hz = 400e3;
        const auto p = pn_psd_from_phase(ph, fs, 1e9, o);
        CHECK(p.integrated_phase_variance() == doctest::Approx(var).epsilon(0.05));
    }

    TEST_CASE("PSDs of independent sources add")
    {
        const double f0 = 480e6;
        const double s1 = std::pow(10.0, -110.0 / 20) * 1e6 / std::pow(f0, 1.5);
        const double s2 = std::pow(10.0, -114.0 / 20) * 1e6 / std::pow(f0, 1.5);
        const auto a = white_fm(f0, 1.2e-3, s1, 1, "a");
        const auto b = white_fm(f0, 1.2e-3, s2, 1, "b");
        EdgeStream sum = a;
        for (std::size_t i = 0; i < sum.size(); ++i) {
            const Timestamp ideal{static_cast<std::int64_t>(i), 0.0};  // tick is the nominal period
            sum.edges[i].time = advance(sum.edges[i].time, seconds_between(b.edges[i].time, ideal, b.tick));
        }
        PsdOptions o;
        o.f_low_hz = 100e3;
        o.f_high_hz = 5e6;
        const auto pa = pn_psd(a, f0, o), pb = pn_psd(b, f0, o), ps = pn_psd(sum, f0, o);
        for (std::size_t i = 0; i < ps.report.size(); ++i) {
            const double lin = std::pow(10.0, pa.report[i].l_dbc_hz / 10) + std::pow(10.0, pb.report[i].l_dbc_hz / 10);
            CHECK(ps.report[i].l_dbc_hz == doctest::Approx(10 * std::log10(lin)).epsilon(1.0 / 110));
        }
    }

    TEST_CASE("PSD preconditions")
    {
        const auto s = white_fm(480e6, 50e-6, 1e-15, 1);
        PsdOptions o;
        o.f_low_hz = 100e3;
        CHECK_THROWS_AS(pn_psd(s, 480e6, o), InsufficientRecord);
        o.f_low_hz = 1e6;
        CHECK_THROWS_AS(pn_psd(s, 300e6, o), AnalysisError);
        o.f_high_hz = 0.5e6;
        CHECK_THROWS_AS(pn_psd(s, 480e6, o), AnalysisError);
    }

    TEST_CASE("spur after integer division drops by 20 log10(k)")
    {
        PllConfig cfg;
        cfg.noise.ripple = SupplyRipple{1e-3, 1e6};
        cfg.sim.duration_s = 160e-6;
        cfg.sim.record_edges = {{Signal::Quad, 1}, {Signal::OutA, 1}};
        const auto tr = simulate(cfg);
        const double f_quad = cfg.f_vco_target() / 2;
        const auto q = spur_level(tr.stream(Signal::Quad).after(40e-6), f_quad, 1e6);
        const auto o = spur_level(tr.stream(Signal::OutA).after(40e-6), f_quad / 2, 1e6);
        CHECK(q.resolved);
        CHECK(o.resolved);
        CHECK(q.level_dbc - o.level_dbc == doctest::Approx(20 * std::log10(2.0)).epsilon(0.5 / 6.02));
    }

    TEST_CASE("lock time")
    {
        PllConfig cfg;
        const auto tr = simulate(cfg);
        const double t = lock_time(tr);
        CHECK(t > 0.0);
        CHECK(t < 200e-6);

        SimTrace already;
        for (int i = 0; i < 200; ++i) already.clk_freq_error.push_back({(i + 1) * 20e-9, 0.0});
        CHECK(lock_time(already) == 0.0);

        SimTrace late;
        for (int i = 0; i < 300; ++i) late.clk_freq_error.push_back({(i + 1) * 20e-9, i < 50 ? 1e-3 : 1e-8});
        CHECK(lock_time(late) == doctest::Approx(50 * 20e-9));

        SimTrace never;
        for (int i = 0; i < 300; ++i) never.clk_freq_error.push_back({(i + 1) * 20e-9, 0.2});
        CHECK_THROWS_WITH_AS(lock_time(never), "never locked", AnalysisError);

        SimTrace by_flag;
        EdgeStream lock{Signal::Lock, 1e-12, {{0, Polarity::Rising, {5000000, 0.0}}}};
        by_flag.edges[Signal::Lock] = lock;
        CHECK(lock_time(by_flag) == doctest::Approx(5e-6));
    }
}
