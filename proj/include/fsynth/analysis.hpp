#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsynth/timebase.hpp"

namespace fsynth {

struct SimTrace;

class AnalysisError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when a record is too short (or too sparse) for the requested analysis.
class InsufficientRecord : public AnalysisError
{
  public:
    using AnalysisError::AnalysisError;
};

// ---------------------------------------------------------------------------
// Time interval error

struct TieSeries {
    std::vector<std::int64_t> index;
    std::vector<double> residual_s;  ///< edge time minus the least-squares ideal clock
    double period_s = 0.0;           ///< fitted spacing per unit of index
    double offset_s = 0.0;           ///< fitted time of index 0
};

/// Ordinary least squares of edge time against edge index. Needs >= 100 edges.
TieSeries tie(const EdgeStream& edges);

double rms(const std::vector<double>& v);

// ---------------------------------------------------------------------------
// Random / deterministic jitter

enum class JitterModel { Unimodal, Bimodal };

struct JitterDecomposition {
    double rj_s = 0.0;  ///< pooled Gaussian sigma
    double dj_s = 0.0;  ///< dual-Dirac peak separation
    JitterModel model = JitterModel::Unimodal;
    std::string method;        ///< "gaussian", "alternate-edge" or "mixture"
    double ll_gain = 0.0;      ///< log-likelihood gain of the chosen two-component fit
    double ll_threshold = 0.0;
};

/*!
 * Dual-Dirac decomposition of a TIE series.
 *
 * Two equal-weight Gaussians with a shared sigma are fitted in two ways:
 * grouped by edge parity (the displacement pattern of mismatched rise/fall
 * times) and as an unlabeled mixture by EM. The parity fit is taken when its
 * log-likelihood gain over a single Gaussian clears the BIC penalty of one
 * extra parameter (ln(n)/2); otherwise the mixture fit is tested against the
 * same threshold; otherwise the series is reported unimodal with dj = 0.
 */
JitterDecomposition decompose(const TieSeries& tie);

/// Removes an uncorrelated instrument floor in quadrature.
double subtract_floor(double total_rms_s, double floor_rms_s);

// ---------------------------------------------------------------------------
// Phase-noise PSD

struct PsdOptions {
    double f_low_hz = 10e3;
    double f_high_hz = 10e6;
    int points_per_decade = 10;
    std::optional<double> rbw_hz;  ///< bin spacing; default f_low/4 (clipped so >= min_segments fit)
    int min_segments = 8;
};

struct PsdPoint {
    double f_hz = 0.0;
    double l_dbc_hz = 0.0;
};

struct PnPsd {
    double carrier_hz = 0.0;
    double fs_hz = 0.0;      ///< uniform resampling rate of the phase record
    double bin_hz = 0.0;     ///< Welch bin spacing
    double enbw_hz = 0.0;
    int segments = 0;
    std::string window = "hann";
    std::string method = "welch, 50% overlap, on first-differenced phase, compensated by 4 sin^2(pi f/fs)";
    std::string convention = "L(f) = S_phi(f)/2, S_phi one-sided";

    std::vector<double> bin_f_hz;      ///< raw bins, k = 1 .. L/2
    std::vector<double> bin_s_phi;     ///< rad^2/Hz, one-sided
    std::vector<double> bin_s_diff;    ///< PSD of the differenced phase (rad^2/Hz) before compensation
    std::vector<PsdPoint> report;      ///< log-spaced grid over [f_low, f_high]

    /// L(f) averaged (in power) over raw bins within +-rel_width of f.
    double level_at(double f_hz, double rel_width = 0.05) const;
    /// Integral of S_phi over the raw bins.
    double integrated_phase_variance() const;
};

/// Phase-noise PSD of a clock from its rising edges. `f0_nominal_hz` is the
/// expected carrier; the fitted carrier must lie within 1% of it.
PnPsd pn_psd(const EdgeStream& edges, double f0_nominal_hz, const PsdOptions& opts = {});

/// Same estimator on an already uniformly sampled phase record (radians).
PnPsd pn_psd_from_phase(const std::vector<double>& phase_rad, double fs_hz, double carrier_hz, const PsdOptions& opts);

struct SpurMeasurement {
    double f_hz = 0.0;
    double level_dbc = 0.0;
    bool resolved = false;  ///< false: no tone above the floor; level is an upper bound
};

/// Integrated single-sideband tone power at f_m relative to the carrier.
SpurMeasurement spur_level(const PnPsd& psd, double f_m_hz);
/// Convenience: builds a PSD with bin spacing f_m/20 and measures the tone.
SpurMeasurement spur_level(const EdgeStream& edges, double f0_nominal_hz, double f_m_hz);

// ---------------------------------------------------------------------------
// Lock time

/// First time after which the per-cycle CLK frequency error stays below
/// 1e-6 for 100 consecutive reference cycles. Falls back to the last LOCK
/// assertion when the trace carries no frequency-error samples.
double lock_time(const SimTrace& trace);

}  // namespace fsynth
