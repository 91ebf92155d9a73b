#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsynth/timebase.hpp"

namespace fsynth {

class DividerError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Feedback divider: pulse-swallow counter of ratio n*p + s

struct FeedbackDividerConfig {
    int n = 2;
    int p = 18;
    int s = 0;
};

/// Empty when the configuration is usable; otherwise one message per broken rule.
std::vector<std::string> check_feedback_divider(const FeedbackDividerConfig& cfg);

int fb_ratio(const FeedbackDividerConfig& cfg);

/*!
 * Cycle-level model of the dual-modulus prescaler with program and swallow
 * counters.
 *
 * The prescaler divides by n+1 while the swallow counter is non-zero and by
 * n afterwards; each prescaler output decrements both counters and the
 * divider fires when the program counter expires. This is the reference the
 * arithmetic divider is checked against.
 */
class PulseSwallowCounter
{
  public:
    explicit PulseSwallowCounter(const FeedbackDividerConfig& cfg);

    /// Feed one input rising edge; true when the divider output fires.
    bool clock();

  private:
    void reload();

    FeedbackDividerConfig cfg_;
    int prescaler_count_ = 0;
    int program_left_ = 0;
    int swallow_left_ = 0;
};

struct FeedbackOutputs {
    EdgeStream div;  ///< one rising edge per n*p+s input rising edges
    EdgeStream clk;  ///< DIV toggled: 50% duty, period 2(n*p+s) inputs
};

/// Arithmetic divider. The first input edge fires DIV and raises CLK, so the
/// k-th CLK rising edge is exactly the (2k(n*p+s))-th input rising edge.
FeedbackOutputs fb_divide(const EdgeStream& input, const FeedbackDividerConfig& cfg);

// ---------------------------------------------------------------------------
// Quadrature divide-by-2

struct QuadratureOutputs {
    EdgeStream i;  ///< toggles on input rising edges
    EdgeStream q;  ///< toggles on input falling edges
};

QuadratureOutputs quadrature_divide(const EdgeStream& input);

// ---------------------------------------------------------------------------
// Programmable output divider: cascade of selectable stages with bypass

using StageSets = std::vector<std::vector<int>>;

/// {1,5} x {1,2,3,4} x {1,2} x {1,2} x {1,2}
const StageSets& default_stage_sets();

struct OutputDividerConfig {
    std::vector<int> selections{1, 1, 1, 1, 1};
};

int total_ratio(const OutputDividerConfig& cfg);

std::vector<std::string> check_output_divider(const OutputDividerConfig& cfg, const StageSets& sets);

/// Every product reachable from the stage sets, ascending.
std::vector<int> outdiv_available_ratios(const StageSets& sets = default_stage_sets());

/// Canonical stage selection for a ratio: prefers an even final active stage
/// (50% duty), then fewer active stages, then lexicographically smaller.
std::optional<OutputDividerConfig> decompose_ratio(int ratio, const StageSets& sets = default_stage_sets());

class OutputDivider
{
  public:
    explicit OutputDivider(const OutputDividerConfig& cfg);

    /// Feed one input transition; returns the output transition it causes, if any.
    std::optional<Polarity> clock(Polarity in);

  private:
    struct Stage {
        int ratio = 1;
        int counter = 0;
    };
    std::vector<Stage> stages_;
};

EdgeStream outdiv_divide(const EdgeStream& input, const OutputDividerConfig& cfg, Signal out_signal = Signal::OutA);

}  // namespace fsynth
