#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "fsynth/analysis.hpp"

namespace fsynth {

namespace {

constexpr double kPi = std::numbers::pi;

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

double diff_gain(double f, double fs)
{
    const double s = std::sin(kPi * f / fs);
    return 4.0 * s * s;
}

/// One-sided Welch estimate with a Hann window and 50% overlap.
/// Returns bins k = 1 .. L/2 - 1 (DC and Nyquist dropped).
void welch(const std::vector<double>& x, double fs, std::size_t seg_len, PnPsd& out)
{
    const std::size_t hop = seg_len / 2;
    const std::size_t n_seg = (x.size() - seg_len) / hop + 1;

    std::vector<double> w(seg_len);
    double sum_w = 0.0, sum_w2 = 0.0;
    for (std::size_t i = 0; i < seg_len; ++i) {
        // periodic Hann keeps the 50% overlap sum flat
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(seg_len));
        sum_w += w[i];
        sum_w2 += w[i] * w[i];
    }

    std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * seg_len)));
    const std::size_t n_out = seg_len / 2 + 1;
    std::unique_ptr<fftw_complex, FftwFree> spec(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_out)));
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(seg_len), in.get(), spec.get(), FFTW_ESTIMATE);

    std::vector<double> acc(n_out, 0.0);
    for (std::size_t s = 0; s < n_seg; ++s) {
        const double* seg = x.data() + s * hop;
        double mean = 0.0;
        for (std::size_t i = 0; i < seg_len; ++i) mean += seg[i];
        mean /= static_cast<double>(seg_len);
        for (std::size_t i = 0; i < seg_len; ++i) in.get()[i] = (seg[i] - mean) * w[i];
        fftw_execute(plan);
        for (std::size_t k = 0; k < n_out; ++k) {
            const double re = spec.get()[k][0], im = spec.get()[k][1];
            acc[k] += re * re + im * im;
        }
    }
    fftw_destroy_plan(plan);

    const double scale = 2.0 / (fs * sum_w2 * static_cast<double>(n_seg));
    const double df = fs / static_cast<double>(seg_len);
    out.bin_hz = df;
    out.enbw_hz = fs * sum_w2 / (sum_w * sum_w);
    out.segments = static_cast<int>(n_seg);
    out.bin_f_hz.clear();
    out.bin_s_diff.clear();
    out.bin_s_phi.clear();
    for (std::size_t k = 1; k + 1 < n_out; ++k) {
        const double f = df * static_cast<double>(k);
        const double sd = acc[k] * scale;
        out.bin_f_hz.push_back(f);
        out.bin_s_diff.push_back(sd);
        out.bin_s_phi.push_back(sd / diff_gain(f, fs));
    }
}

double to_dbc(double s_phi) { return 10.0 * std::log10(s_phi / 2.0); }

}  // namespace

PnPsd pn_psd_from_phase(const std::vector<double>& phase_rad, double fs_hz, double carrier_hz, const PsdOptions& opts)
{
    if (!(opts.f_low_hz > 0.0) || !(opts.f_high_hz > opts.f_low_hz))
        throw AnalysisError("PSD band must satisfy 0 < f_low < f_high");
    if (opts.points_per_decade < 1) throw AnalysisError("points_per_decade must be >= 1");
    if (opts.min_segments < 1) throw AnalysisError("min_segments must be >= 1");
    if (opts.f_high_hz >= fs_hz / 2.0) throw AnalysisError("f_high must be below half the phase sample rate");

    const double record_s = static_cast<double>(phase_rad.size()) / fs_hz;
    if (record_s < 10.0 / opts.f_low_hz)
        throw InsufficientRecord("record of " + std::to_string(record_s) + " s is shorter than 10/f_low = " +
                                 std::to_string(10.0 / opts.f_low_hz) + " s");

    std::vector<double> d(phase_rad.size() - 1);
    for (std::size_t i = 0; i + 1 < phase_rad.size(); ++i) d[i] = phase_rad[i + 1] - phase_rad[i];

    const double rbw = opts.rbw_hz.value_or(opts.f_low_hz / 4.0);
    if (!(rbw > 0.0)) throw AnalysisError("rbw must be positive");
    auto seg_len = static_cast<std::size_t>(std::llround(fs_hz / rbw));
    // clip so that at least min_segments half-overlapped segments fit
    const std::size_t max_len = 2 * d.size() / static_cast<std::size_t>(opts.min_segments + 1);
    seg_len = std::min(seg_len, max_len);
    seg_len -= seg_len % 2;
    if (seg_len < 16) throw InsufficientRecord("record too short for the requested segment count");

    PnPsd out;
    out.carrier_hz = carrier_hz;
    out.fs_hz = fs_hz;
    welch(d, fs_hz, seg_len, out);

    const double step = std::pow(10.0, 1.0 / opts.points_per_decade);
    const double half = std::sqrt(step);
    const int n_pts = static_cast<int>(std::floor(std::log10(opts.f_high_hz / opts.f_low_hz) * opts.points_per_decade + 1e-9)) + 1;
    for (int i = 0; i < n_pts; ++i) {
        const double f = opts.f_low_hz * std::pow(step, i);
        double sum = 0.0;
        int cnt = 0;
        for (std::size_t k = 0; k < out.bin_f_hz.size(); ++k) {
            if (out.bin_f_hz[k] >= f / half && out.bin_f_hz[k] < f * half) {
                sum += out.bin_s_phi[k];
                ++cnt;
            }
        }
        if (cnt == 0) {
            const auto k = std::min(out.bin_f_hz.size() - 1, static_cast<std::size_t>(std::max(0.0, std::round(f / out.bin_hz) - 1.0)));
            sum = out.bin_s_phi[k];
            cnt = 1;
        }
        out.report.push_back({f, to_dbc(sum / cnt)});
    }
    return out;
}

PnPsd pn_psd(const EdgeStream& edges, double f0_nominal_hz, const PsdOptions& opts)
{
    if (!(f0_nominal_hz > 0.0)) throw AnalysisError("nominal carrier must be positive");
    const EdgeStream rising = edges.only(Polarity::Rising);
    const TieSeries t = tie(rising);

    // Index units per carrier period (2 when the index counts both polarities).
    const double per = t.period_s;
    const double m = std::round(1.0 / (f0_nominal_hz * per));
    if (m < 1.0) throw AnalysisError("edge stream is faster than the nominal carrier");
    const double carrier = 1.0 / (m * per);
    if (std::abs(carrier - f0_nominal_hz) > 0.01 * f0_nominal_hz)
        throw AnalysisError("fitted carrier " + std::to_string(carrier) + " Hz is not within 1% of nominal");

    const std::size_t n = rising.size();
    const double t0 = rising.seconds(0);
    const double span = seconds_between(rising.edges.back().time, rising.edges.front().time, rising.tick);
    if (span < 10.0 / opts.f_low_hz)
        throw InsufficientRecord("record of " + std::to_string(span) + " s is shorter than 10/f_low = " +
                                 std::to_string(10.0 / opts.f_low_hz) + " s");

    const double fs_src = static_cast<double>(n - 1) / span;
    const double fs = std::min(32.0 * opts.f_high_hz, fs_src);

    // Phase at each edge, placed at its ideal time so the grid is exact.
    const double period_carrier = m * per;
    std::vector<double> te(n), ph(n);
    for (std::size_t i = 0; i < n; ++i) {
        te[i] = t.offset_s + static_cast<double>(t.index[i]) * per - t0;
        ph[i] = 2.0 * kPi * t.residual_s[i] / period_carrier;
    }

    const auto n_grid = static_cast<std::size_t>(std::floor(te.back() * fs)) + 1;
    std::vector<double> grid(n_grid);
    std::size_t j = 0;
    for (std::size_t g = 0; g < n_grid; ++g) {
        const double tg = static_cast<double>(g) / fs;
        while (j + 2 < n && te[j + 1] <= tg) ++j;
        const double a = (tg - te[j]) / (te[j + 1] - te[j]);
        grid[g] = ph[j] + std::clamp(a, 0.0, 1.0) * (ph[j + 1] - ph[j]);
    }
    return pn_psd_from_phase(grid, fs, carrier, opts);
}

double PnPsd::level_at(double f_hz, double rel_width) const
{
    double sum = 0.0;
    int cnt = 0;
    for (std::size_t k = 0; k < bin_f_hz.size(); ++k) {
        if (std::abs(bin_f_hz[k] - f_hz) <= rel_width * f_hz) {
            sum += bin_s_phi[k];
            ++cnt;
        }
    }
    if (cnt == 0) throw AnalysisError("no PSD bins near " + std::to_string(f_hz) + " Hz");
    return to_dbc(sum / cnt);
}

double PnPsd::integrated_phase_variance() const
{
    double s = 0.0;
    for (double v : bin_s_phi) s += v * bin_hz;
    return s;
}

SpurMeasurement spur_level(const PnPsd& psd, double f_m_hz)
{
    constexpr long kHalf = 3;       // tone bins each side
    constexpr long kFloorOuter = 12;
    if (psd.bin_f_hz.empty()) throw AnalysisError("empty PSD");
    const long n = static_cast<long>(psd.bin_f_hz.size());
    const long k0 = std::lround(f_m_hz / psd.bin_hz) - 1;  // bin_f[k] = (k+1)*df
    if (k0 - kFloorOuter < 0 || k0 + kFloorOuter >= n) throw AnalysisError("spur frequency too close to the PSD edges");

    double tone = 0.0;
    for (long k = k0 - kHalf; k <= k0 + kHalf; ++k) tone += psd.bin_s_diff[static_cast<std::size_t>(k)];

    std::vector<double> side;
    for (long k = k0 - kFloorOuter; k <= k0 + kFloorOuter; ++k)
        if (std::abs(k - k0) > kHalf + 1) side.push_back(psd.bin_s_diff[static_cast<std::size_t>(k)]);
    std::nth_element(side.begin(), side.begin() + static_cast<long>(side.size() / 2), side.end());
    const double floor = side[side.size() / 2];

    const double bins = 2 * kHalf + 1;
    const double excess = tone - bins * floor;
    SpurMeasurement m;
    m.f_hz = f_m_hz;
    m.resolved = excess > bins * floor;
    const double var_phi = std::max(excess, bins * floor) * psd.bin_hz / diff_gain(f_m_hz, psd.fs_hz);
    m.level_dbc = 10.0 * std::log10(var_phi / 2.0);
    return m;
}

SpurMeasurement spur_level(const EdgeStream& edges, double f0_nominal_hz, double f_m_hz)
{
    PsdOptions o;
    o.rbw_hz = f_m_hz / 20.0;
    o.f_low_hz = f_m_hz / 4.0;
    o.f_high_hz = 4.0 * f_m_hz;
    o.points_per_decade = 10;
    return spur_level(pn_psd(edges, f0_nominal_hz, o), f_m_hz);
}

}  // namespace fsynth
