#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fsynth/config.hpp"

namespace fsynth {

struct WaveformSample {
    double t_s = 0.0;
    double v_ctrl_v = 0.0;
    double v_x_v = 0.0;
    int band = 0;
    double supply_dev_v = 0.0;
};

/// Relative frequency error of one CLK period against the reference.
struct FreqErrorSample {
    double t_s = 0.0;
    double rel_error = 0.0;
};

struct SimSummary {
    std::optional<double> lock_time_s;
    double final_freq_error = 0.0;  ///< over the last 100 CLK periods
    double mean_vctrl_v = 0.0;      ///< over the last quarter of the run
    bool locked_at_end = false;
    int band = 0;
    std::int64_t clamp_events = 0;
    std::int64_t vco_cycles = 0;
};

struct SimTrace {
    double tick_s = 0.0;  ///< nominal VCO period; every timestamp is cycle*tick + residual
    double duration_s = 0.0;
    std::map<Signal, EdgeStream> edges;
    std::vector<WaveformSample> waveforms;
    std::vector<FreqErrorSample> clk_freq_error;
    SimSummary summary;

    /// Recorded stream of a signal; throws std::out_of_range if it was not recorded.
    const EdgeStream& stream(Signal s) const;
};

/// Streaming consumer of every edge a run produces, recorded or not.
class EdgeObserver
{
  public:
    virtual ~EdgeObserver() = default;
    virtual void on_edge(const EdgeEvent& e, double tick) = 0;
};

/// Runtime diagnostic that stops a run (for example a rail-pinned control voltage).
class SimulationError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/*!
 * Closed-loop run of the synthesizer.
 *
 * Events (REF edges, VCO edges, PFD reset expiry, waveform samples) are
 * processed in time order. Between events the charge-pump current is
 * constant and the loop filter and lock detector advance in closed form.
 * The VCO frequency is re-evaluated once per VCO cycle from v_ctrl and the
 * supply deviation at the start of the cycle.
 *
 * Signal chain: VCO -> quadrature /2 (QUAD) -> pulse-swallow (DIV) -> /2 (CLK)
 * into the PFD; QUAD also drives both output dividers.
 */
SimTrace simulate(const PllConfig& cfg, std::span<EdgeObserver* const> observers = {});

/// Free-running VCO at the configured target frequency: same noise sources
/// and divider chain, no reference and no loop action.
SimTrace simulate_open_vco(const PllConfig& cfg, double duration_s, std::span<EdgeObserver* const> observers = {});

/// Running least-squares TIE statistics of one signal's rising edges, so
/// long runs need not keep the edges.
class RunningTie : public EdgeObserver
{
  public:
    explicit RunningTie(Signal s, double t_start = 0.0) : signal_(s), t_start_(t_start) {}
    void on_edge(const EdgeEvent& e, double tick) override;

    std::int64_t count() const { return n_; }
    double period() const;
    double rms() const;

  private:
    Signal signal_;
    double t_start_;
    std::optional<Timestamp> origin_;
    double guess_period_ = 0.0;
    std::int64_t n_ = 0;
    // Welford accumulators over (k, t - k*guess_period)
    double mean_k_ = 0, mean_r_ = 0, c_kk_ = 0, c_kr_ = 0, c_rr_ = 0;
};

}  // namespace fsynth
