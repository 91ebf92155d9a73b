#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsynth/config.hpp"

namespace fsynth {

// ---------------------------------------------------------------------------
// Frequency planner

class PlanError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

struct PlanRequest {
    double f_ref_hz = 0.0;
    double f_out_a_hz = 0.0;
    std::optional<double> f_out_b_hz;
};

struct Plan {
    double f_ref_hz = 0.0;
    int np_plus_s = 0;
    int p = 0;
    int s = 0;
    double f_vco_hz = 0.0;
    int band_hint = 0;
    OutputDividerConfig outdiv_a;
    std::optional<OutputDividerConfig> outdiv_b;
    bool exact = false;
    double f_out_a_hz = 0.0;  ///< achieved
    std::optional<double> f_out_b_hz;
    double error_ppm_a = 0.0;
    std::optional<double> error_ppm_b;
};

/// Exhaustive search over feedback ratios and output-divider ratios.
/// Outputs are taken from the quadrature rail (f_vco/2).
Plan plan(const PlanRequest& req, const VcoParams& vco = {}, const StageSets& sets = default_stage_sets());

/// `base` with the plan's reference, dividers and outputs applied.
PllConfig config_from_plan(const Plan& p, PllConfig base = {});

// ---------------------------------------------------------------------------
// Register map
//
//   0x00  P[5:0]
//   0x01  S[3:0]
//   0x02  band[3:0], bit 4 = automatic band search
//   0x03  output divider A stage code
//   0x04  output divider B stage code
//   0x05  charge-pump DAC[4:0]   (0.625 uA per LSB)
//   0x06  VCO bias DAC[4:0]
//   0x07  status, bit 0 = LOCK (read only)
//
// A stage code packs each stage's index within its set, first stage in the
// least significant bits, ceil(log2(set size)) bits per stage.

inline constexpr const char* kRegmapVersion = "fsynth.regmap/1";
inline constexpr double kCpDacLsbA = 0.625e-6;

class RegisterError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

struct RegisterSettings {
    int p = 18;
    int s = 0;
    int band = 0;
    bool auto_band = true;
    OutputDividerConfig outdiv_a{{1, 1, 1, 1, 2}};
    OutputDividerConfig outdiv_b{{1, 4, 1, 1, 2}};
    int cp_dac = 16;
    int vco_bias_dac = 16;

    bool operator==(const RegisterSettings& o) const;
};

struct Biases {
    int cp_dac = 16;
    int vco_bias_dac = 16;
};

struct Transaction {
    std::uint8_t address = 0;
    std::uint8_t value = 0;
};

class RegisterFile
{
  public:
    static constexpr std::uint8_t kStatus = 0x07;
    static constexpr std::size_t kSize = 8;

    void write(std::uint8_t address, std::uint8_t value);
    std::uint8_t read(std::uint8_t address) const;
    void apply(const std::vector<Transaction>& txns);

    /// Source for the LOCK status bit, typically a running or finished simulation.
    void attach(std::function<bool()> lock_probe) { probe_ = std::move(lock_probe); }
    void detach() { probe_ = nullptr; }

  private:
    std::array<std::uint8_t, kSize> regs_{};
    std::function<bool()> probe_;
};

/// Writable-bit mask of each address (0 for status).
std::uint8_t register_mask(std::uint8_t address);

std::uint8_t encode_stage_code(const OutputDividerConfig& cfg, const StageSets& sets = default_stage_sets());
OutputDividerConfig decode_stage_code(std::uint8_t code, const StageSets& sets = default_stage_sets());

/// Register writes for 0x00..0x06 in ascending address order. Throws
/// RegisterError when a value does not fit its field.
std::vector<Transaction> encode(const RegisterSettings& s, const StageSets& sets = default_stage_sets());
RegisterSettings decode(const RegisterFile& regs, const StageSets& sets = default_stage_sets());

RegisterSettings settings_from_plan(const Plan& p, const Biases& b = {});

struct EncodedPlan {
    RegisterFile regs;
    std::vector<Transaction> transactions;
};
EncodedPlan encode(const Plan& p, const Biases& b = {}, const StageSets& sets = default_stage_sets());

/// Applies programmed fields to a simulation config.
PllConfig apply_settings(const RegisterSettings& s, PllConfig base);

/// One "AA=VV" line per transaction.
std::string to_hex_lines(const std::vector<Transaction>& txns);
std::vector<Transaction> parse_hex_lines(const std::string& text);

}  // namespace fsynth
