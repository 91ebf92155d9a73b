#pragma once

#include <cstdint>
#include <stdexcept>

#include "fsynth/timebase.hpp"

namespace fsynth {

struct VcoParams {
    double f_min_hz = 5.6e9;    ///< all capacitors engaged, v_ctrl = v_mid
    double f_max_hz = 8.6e9;    ///< no capacitors engaged, v_ctrl = v_mid
    int n_caps = 8;
    double kvco_hz_per_v = 0.6e9;
    double kvdd_hz_per_v = 48e6;
    double kvddl_hz_per_v = 380e6;
    double vddl_v = 0.8;
    double v_mid_v = 0.6;
    double band_overlap = 0.2;  ///< fraction of a band's fine-tuning span shared with its neighbour
};

struct VcoState {
    int band = 0;
    std::int64_t cycles = 0;  ///< rising edges emitted so far
    Timestamp last_update;
};

class VcoError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Band-centre frequency at v_ctrl = v_mid; band counts engaged capacitors.
double band_frequency(int band, const VcoParams& p);
/// Spacing between adjacent band centres.
double band_step(const VcoParams& p);
/// Fine-tuning span covered by one band (step widened by the overlap).
double band_span(const VcoParams& p);

double vco_frequency(int band, double v_ctrl, double v_ddl_dev, const VcoParams& p);

struct VcoEdge {
    VcoState state;
    EdgeEvent edge;
};

/// Emits the next rising edge one period (plus jitter) after the last one.
/// v_ctrl and the supply deviation are held for the whole period.
VcoEdge vco_next_edge(const VcoState& state, double v_ctrl, double v_ddl_dev, const VcoParams& p,
                      double jitter_s, double tick);

/// Band whose centre is nearest the target. Throws VcoError when the control
/// voltage needed for exact lock would fall outside (0.1 vdd, 0.9 vdd).
int band_search(double target_hz, const VcoParams& p, double vdd);

/// Control voltage that puts `band` exactly on `target_hz`.
double lock_vctrl(int band, double target_hz, const VcoParams& p);

}  // namespace fsynth
