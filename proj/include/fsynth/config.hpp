#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsynth/dividers.hpp"
#include "fsynth/lock_detector.hpp"
#include "fsynth/loop_blocks.hpp"
#include "fsynth/noise.hpp"
#include "fsynth/timebase.hpp"
#include "fsynth/vco.hpp"

namespace fsynth {

inline constexpr const char* kConfigSchema = "fsynth.config/1";

/// Which signal to keep in the trace, and how sparsely: every `every`-th
/// transition is stored, indices still count all of them.
struct RecordSpec {
    Signal signal = Signal::Clk;
    std::int64_t every = 1;
};

struct SimControl {
    double duration_s = 300e-6;
    std::uint64_t seed = 1;
    double sample_interval_s = 100e-9;
    std::vector<RecordSpec> record_edges{{Signal::Clk, 1}, {Signal::Lock, 1}};
    std::optional<double> vctrl_init_v;  ///< default: v_mid
    /// Reference phase step: every REF edge at or after ref_step_at_s is
    /// delayed by ref_step_s (zero disables).
    double ref_step_at_s = 0.0;
    double ref_step_s = 0.0;
};

struct PllConfig {
    double f_ref_hz = 50e6;
    double vdd_v = 1.2;
    PfdParams pfd;
    ChargePumpParams cp;
    LoopFilterParams filter{38.51e3, 56.99e-12, 6.291e-12};
    VcoParams vco;
    std::optional<int> forced_band;  ///< empty: automatic band search
    FeedbackDividerConfig fbdiv{2, 18, 0};
    StageSets stage_sets = default_stage_sets();
    OutputDividerConfig outdiv_a{{1, 1, 1, 1, 2}};
    OutputDividerConfig outdiv_b{{1, 4, 1, 1, 2}};
    LockDetectorParams lockdet;
    NoiseSpec noise;
    SimControl sim;

    int np_plus_s() const { return fbdiv.n * fbdiv.p + fbdiv.s; }
    /// VCO frequency implied by the dividers: quadrature /2, feedback n*p+s, CLK /2.
    double f_vco_target() const { return 4.0 * f_ref_hz * np_plus_s(); }
};

struct Violation {
    std::string field;
    std::string message;
};

std::vector<Violation> validate_config(const PllConfig& cfg);

class ConfigError : public std::runtime_error
{
  public:
    explicit ConfigError(std::vector<std::string> messages);
    const std::vector<std::string>& messages() const { return messages_; }

  private:
    std::vector<std::string> messages_;
};

/// Parses the INI-style text format. Throws ConfigError listing every
/// malformed, unknown or non-finite entry.
PllConfig parse_config(const std::string& text);
PllConfig load_config(const std::string& path);

/// Canonical text form; parse(serialize(c)) reproduces c exactly.
std::string serialize_config(const PllConfig& cfg);

std::string format_number(double v);

}  // namespace fsynth
