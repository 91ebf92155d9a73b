#include "fsynth/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fsynth/engine.hpp"

namespace fsynth {

TieSeries tie(const EdgeStream& edges)
{
    const std::size_t n = edges.size();
    if (n < 100) throw InsufficientRecord("TIE needs at least 100 edges, got " + std::to_string(n));

    const auto& first = edges.edges.front();
    const auto& last = edges.edges.back();
    const double span_k = static_cast<double>(last.index - first.index);
    if (span_k <= 0) throw AnalysisError("edge indices must increase");
    const double guess = seconds_between(last.time, first.time, edges.tick) / span_k;

    // Work on small quantities r = (t - t0) - k*guess so the fit keeps
    // sub-femtosecond resolution over long records.
    std::vector<double> k(n), r(n);
    for (std::size_t i = 0; i < n; ++i) {
        k[i] = static_cast<double>(edges.edges[i].index - first.index);
        r[i] = seconds_between(edges.edges[i].time, first.time, edges.tick) - k[i] * guess;
    }
    const double mk = std::accumulate(k.begin(), k.end(), 0.0) / static_cast<double>(n);
    const double mr = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(n);
    double skk = 0.0, skr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        skk += (k[i] - mk) * (k[i] - mk);
        skr += (k[i] - mk) * (r[i] - mr);
    }
    const double slope = skr / skk;

    TieSeries out;
    out.index.resize(n);
    out.residual_s.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.index[i] = edges.edges[i].index;
        out.residual_s[i] = (r[i] - mr) - slope * (k[i] - mk);
    }
    out.period_s = guess + slope;
    // time of index 0 = t0 + (mr - slope*mk) - first.index * period
    out.offset_s = first.time.seconds(edges.tick) + (mr - slope * mk) - static_cast<double>(first.index) * out.period_s;
    return out;
}

double rms(const std::vector<double>& v)
{
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

Moments moments(const std::vector<double>& x)
{
    Moments m;
    for (double v : x) m.mean += v;
    m.mean /= static_cast<double>(x.size());
    for (double v : x) m.var += (v - m.mean) * (v - m.mean);
    m.var /= static_cast<double>(x.size());
    return m;
}

double gaussian_ll(double var, std::size_t n)
{
    return -0.5 * static_cast<double>(n) * (std::log(2.0 * std::numbers::pi * var) + 1.0);
}

struct MixtureFit {
    double mu1 = 0.0, mu2 = 0.0, var = 0.0, ll = -INFINITY;
};

/// Equal-weight two-Gaussian mixture with shared variance, EM from one start.
MixtureFit fit_mixture(const std::vector<double>& x, double mu1, double mu2, double var)
{
    const double n = static_cast<double>(x.size());
    MixtureFit fit{mu1, mu2, var, -INFINITY};
    for (int iter = 0; iter < 500; ++iter) {
        double s1 = 0, s1x = 0, s2 = 0, s2x = 0, ll = 0;
        const double inv2v = 0.5 / fit.var;
        const double norm = 0.5 / std::sqrt(2.0 * std::numbers::pi * fit.var);
        std::vector<double> g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double a = -(x[i] - fit.mu1) * (x[i] - fit.mu1) * inv2v;
            const double b = -(x[i] - fit.mu2) * (x[i] - fit.mu2) * inv2v;
            const double m = std::max(a, b);
            const double ea = std::exp(a - m), eb = std::exp(b - m);
            g[i] = ea / (ea + eb);
            ll += std::log(norm) + m + std::log(ea + eb);
            s1 += g[i];
            s1x += g[i] * x[i];
            s2 += 1.0 - g[i];
            s2x += (1.0 - g[i]) * x[i];
        }
        const double prev = fit.ll;
        fit.ll = ll;
        if (s1 <= 0 || s2 <= 0) break;
        fit.mu1 = s1x / s1;
        fit.mu2 = s2x / s2;
        double sv = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            sv += g[i] * (x[i] - fit.mu1) * (x[i] - fit.mu1) + (1.0 - g[i]) * (x[i] - fit.mu2) * (x[i] - fit.mu2);
        fit.var = std::max(sv / n, 1e-12 * var);
        if (std::abs(ll - prev) < 1e-9 * std::abs(ll)) break;
    }
    return fit;
}

}  // namespace

JitterDecomposition decompose(const TieSeries& t)
{
    const auto& x = t.residual_s;
    const std::size_t n = x.size();
    if (n < 10000) throw InsufficientRecord("decomposition needs at least 1e4 TIE samples, got " + std::to_string(n));
    const Moments all = moments(x);
    if (!(all.var > 0.0)) throw AnalysisError("degenerate TIE series (zero variance)");

    const double ll0 = gaussian_ll(all.var, n);
    const double threshold = 0.5 * std::log(static_cast<double>(n));

    JitterDecomposition out;
    out.ll_threshold = threshold;

    // Alternate-edge grouping.
    double sum[2] = {0, 0};
    double cnt[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        const int p = static_cast<int>(t.index[i] & 1);
        sum[p] += x[i];
        cnt[p] += 1;
    }
    if (cnt[0] > 0 && cnt[1] > 0) {
        const double m0 = sum[0] / cnt[0], m1 = sum[1] / cnt[1];
        double sv = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double m = (t.index[i] & 1) ? m1 : m0;
            sv += (x[i] - m) * (x[i] - m);
        }
        const double var = sv / static_cast<double>(n);
        const double gain = gaussian_ll(var, n) - ll0;
        if (gain > threshold) {
            out.model = JitterModel::Bimodal;
            out.method = "alternate-edge";
            out.dj_s = std::abs(m1 - m0);
            out.rj_s = std::sqrt(var);
            out.ll_gain = gain;
            return out;
        }
    }

    // Unlabeled mixture: starts from the fourth-cumulant estimate and two fixed spreads.
    double m4 = 0.0;
    for (double v : x) m4 += std::pow(v - all.mean, 4);
    m4 /= static_cast<double>(n);
    const double k4 = m4 - 3.0 * all.var * all.var;
    const double sd = std::sqrt(all.var);
    std::vector<double> half_seps{0.5 * sd, 0.9 * sd};
    if (k4 < 0) half_seps.push_back(std::min(0.99 * sd, std::pow(-k4 / 2.0, 0.25)));

    MixtureFit best;
    for (double a : half_seps) {
        const auto f = fit_mixture(x, all.mean - a, all.mean + a, std::max(all.var - a * a, 0.01 * all.var));
        if (f.ll > best.ll) best = f;
    }
    const double gain = best.ll - ll0;
    if (gain > threshold) {
        out.model = JitterModel::Bimodal;
        out.method = "mixture";
        out.dj_s = std::abs(best.mu2 - best.mu1);
        out.rj_s = std::sqrt(best.var);
        out.ll_gain = gain;
        return out;
    }

    out.model = JitterModel::Unimodal;
    out.method = "gaussian";
    out.rj_s = sd;
    out.dj_s = 0.0;
    out.ll_gain = std::max(gain, 0.0);
    return out;
}

double subtract_floor(double total_rms_s, double floor_rms_s)
{
    if (total_rms_s < floor_rms_s) throw AnalysisError("floor exceeds measurement");
    return std::sqrt(total_rms_s * total_rms_s - floor_rms_s * floor_rms_s);
}

double lock_time(const SimTrace& trace)
{
    constexpr double kTolerance = 1e-6;
    constexpr std::size_t kRun = 100;
    const auto& fe = trace.clk_freq_error;
    if (!fe.empty()) {
        std::size_t run = 0;
        for (std::size_t i = 0; i < fe.size(); ++i) {
            run = std::abs(fe[i].rel_error) < kTolerance ? run + 1 : 0;
            if (run == kRun) {
                const std::size_t start = i + 1 - kRun;
                return start == 0 ? 0.0 : fe[start - 1].t_s;
            }
        }
    }
    if (auto it = trace.edges.find(Signal::Lock); it != trace.edges.end() && !it->second.empty()) {
        const auto& lock = it->second;
        const auto& last = lock.edges.back();
        if (last.polarity == Polarity::Rising) return last.time.seconds(lock.tick);
    }
    throw AnalysisError("never locked");
}

}  // namespace fsynth
