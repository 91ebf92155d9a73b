#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "fsynth/analysis.hpp"
#include "fsynth/design.hpp"
#include "fsynth/engine.hpp"
#include "fsynth/progif.hpp"

namespace fsynth {

inline constexpr const char* kEdgesSchema = "fsynth.edges/1";
inline constexpr const char* kWaveformsSchema = "fsynth.waveforms/1";
inline constexpr const char* kFreqErrorSchema = "fsynth.freq_error/1";
inline constexpr const char* kSummarySchema = "fsynth.summary/1";
inline constexpr const char* kManifestSchema = "fsynth.manifest/1";
inline constexpr const char* kAnalysisSchema = "fsynth.analysis/1";
inline constexpr const char* kBudgetSchema = "fsynth.budget/1";
inline constexpr const char* kDesignSchema = "fsynth.filter_design/1";
inline constexpr const char* kPlanSchema = "fsynth.plan/1";
inline constexpr const char* kPsdSchema = "fsynth.psd/1";
inline constexpr const char* kTieHistSchema = "fsynth.tie_hist/1";
inline constexpr const char* kToolVersion = "0.3.0";

class TraceFormatError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

using EdgeMap = std::map<Signal, EdgeStream>;

/// CSV with a "# schema tick_s=..." first line, then
/// signal,index,polarity,cycle_index,residual_s,time_s.
void write_edges_csv(std::ostream& os, const EdgeMap& edges, double tick_s);
EdgeMap read_edges_csv(std::istream& is);
EdgeMap read_edges_csv(const std::filesystem::path& path);

void write_waveforms_csv(std::ostream& os, const std::vector<WaveformSample>& w);
void write_freq_error_csv(std::ostream& os, const std::vector<FreqErrorSample>& fe);
void write_psd_csv(std::ostream& os, const PnPsd& psd);
void write_tie_histogram_csv(std::ostream& os, const TieSeries& t, int bins = 101);

nlohmann::ordered_json summary_json(const SimTrace& trace);
nlohmann::ordered_json tie_json(const TieSeries& t);
nlohmann::ordered_json decomposition_json(const JitterDecomposition& d);
nlohmann::ordered_json psd_json(const PnPsd& psd);
nlohmann::ordered_json spur_json(const SpurMeasurement& s);
nlohmann::ordered_json plan_json(const Plan& p);
nlohmann::ordered_json transactions_json(const std::vector<Transaction>& t);
nlohmann::ordered_json settings_json(const RegisterSettings& s);
nlohmann::ordered_json filter_design_json(const FilterDesignSpec& spec, const FilterDesign& d);

/// JSON text with a trailing newline; numbers printed in shortest round-trip form.
std::string dump(const nlohmann::ordered_json& j);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string hex64(std::uint64_t v);

}  // namespace fsynth
