#include "fsynth/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace fsynth {

using nlohmann::ordered_json;

namespace {

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t line)
{
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw TraceFormatError("line " + std::to_string(line) + ": bad number '" + s + "'");
    }
}

std::int64_t parse_int(const std::string& s, std::size_t line)
{
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw TraceFormatError("line " + std::to_string(line) + ": bad integer '" + s + "'");
    }
}

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

}  // namespace

void write_edges_csv(std::ostream& os, const EdgeMap& edges, double tick_s)
{
    os << "# " << kEdgesSchema << " tick_s=" << format_number(tick_s) << '\n';
    os << "signal,index,polarity,cycle_index,residual_s,time_s\n";
    for (const auto& [sig, stream] : edges) {
        for (const auto& e : stream.edges) {
            os << to_string(sig) << ',' << e.index << ',' << (e.polarity == Polarity::Rising ? "rise" : "fall") << ','
               << e.time.cycle << ',' << format_number(e.time.residual) << ',' << format_number(e.time.seconds(tick_s))
               << '\n';
        }
    }
}

EdgeMap read_edges_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) throw TraceFormatError("empty edge file");
    const std::string prefix = std::string("# ") + kEdgesSchema + " tick_s=";
    if (line.rfind(prefix, 0) != 0) throw TraceFormatError("missing or unsupported schema line (expected " + std::string(kEdgesSchema) + ")");
    const double tick = parse_double(line.substr(prefix.size()), 1);
    if (!(tick > 0.0)) throw TraceFormatError("tick_s must be positive");
    if (!std::getline(is, line) || line != "signal,index,polarity,cycle_index,residual_s,time_s")
        throw TraceFormatError("missing column header");

    EdgeMap out;
    std::size_t n = 2;
    while (std::getline(is, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 6) throw TraceFormatError("line " + std::to_string(n) + ": expected 6 fields");
        const auto sig = parse_signal(f[0]);
        if (!sig) throw TraceFormatError("line " + std::to_string(n) + ": unknown signal '" + f[0] + "'");
        EdgeSample e;
        e.index = parse_int(f[1], n);
        if (f[2] == "rise")
            e.polarity = Polarity::Rising;
        else if (f[2] == "fall")
            e.polarity = Polarity::Falling;
        else
            throw TraceFormatError("line " + std::to_string(n) + ": polarity must be rise or fall");
        e.time.cycle = parse_int(f[3], n);
        e.time.residual = parse_double(f[4], n);
        auto [it, inserted] = out.try_emplace(*sig, EdgeStream{*sig, tick, {}});
        it->second.edges.push_back(e);
    }
    return out;
}

EdgeMap read_edges_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw TraceFormatError("cannot open " + path.string());
    return read_edges_csv(in);
}

void write_waveforms_csv(std::ostream& os, const std::vector<WaveformSample>& w)
{
    os << "# " << kWaveformsSchema << '\n' << "t_s,v_ctrl_v,v_x_v,band,supply_dev_v\n";
    for (const auto& s : w)
        os << format_number(s.t_s) << ',' << format_number(s.v_ctrl_v) << ',' << format_number(s.v_x_v) << ',' << s.band
           << ',' << format_number(s.supply_dev_v) << '\n';
}

void write_freq_error_csv(std::ostream& os, const std::vector<FreqErrorSample>& fe)
{
    os << "# " << kFreqErrorSchema << '\n' << "t_s,rel_error\n";
    for (const auto& s : fe) os << format_number(s.t_s) << ',' << format_number(s.rel_error) << '\n';
}

void write_psd_csv(std::ostream& os, const PnPsd& psd)
{
    os << "# " << kPsdSchema << " carrier_hz=" << format_number(psd.carrier_hz) << '\n' << "f_hz,l_dbc_hz\n";
    for (const auto& p : psd.report) os << format_number(p.f_hz) << ',' << format_number(p.l_dbc_hz) << '\n';
}

void write_tie_histogram_csv(std::ostream& os, const TieSeries& t, int bins)
{
    os << "# " << kTieHistSchema << '\n' << "bin_center_s,count\n";
    if (t.residual_s.empty() || bins < 1) return;
    const auto [lo_it, hi_it] = std::minmax_element(t.residual_s.begin(), t.residual_s.end());
    const double lo = *lo_it, hi = *hi_it;
    const double w = hi > lo ? (hi - lo) / bins : 1e-15;
    std::vector<std::int64_t> counts(static_cast<std::size_t>(bins), 0);
    for (double x : t.residual_s) {
        auto k = static_cast<std::size_t>((x - lo) / w);
        counts[std::min(k, counts.size() - 1)]++;
    }
    for (int i = 0; i < bins; ++i) os << format_number(lo + (i + 0.5) * w) << ',' << counts[static_cast<std::size_t>(i)] << '\n';
}

ordered_json summary_json(const SimTrace& trace)
{
    const auto& s = trace.summary;
    ordered_json j;
    j["schema"] = kSummarySchema;
    j["duration_s"] = trace.duration_s;
    j["tick_s"] = trace.tick_s;
    j["locked_at_end"] = s.locked_at_end;
    j["lock_time_s"] = opt(s.lock_time_s);
    j["final_freq_error"] = s.final_freq_error;
    j["mean_vctrl_v"] = s.mean_vctrl_v;
    j["band"] = s.band;
    j["clamp_events"] = s.clamp_events;
    j["vco_cycles"] = s.vco_cycles;
    ordered_json counts = ordered_json::object();
    for (const auto& [sig, st] : trace.edges) counts[std::string(to_string(sig))] = st.size();
    j["recorded_edges"] = counts;
    return j;
}

ordered_json tie_json(const TieSeries& t)
{
    ordered_json j;
    j["samples"] = t.residual_s.size();
    j["period_s"] = t.period_s;
    j["rms_s"] = rms(t.residual_s);
    if (!t.residual_s.empty()) {
        const auto [lo, hi] = std::minmax_element(t.residual_s.begin(), t.residual_s.end());
        j["pk_pk_s"] = *hi - *lo;
    }
    return j;
}

ordered_json decomposition_json(const JitterDecomposition& d)
{
    ordered_json j;
    j["model"] = d.model == JitterModel::Bimodal ? "bimodal" : "unimodal";
    j["method"] = d.method;
    j["rj_s"] = d.rj_s;
    j["dj_s"] = d.dj_s;
    j["ll_gain"] = d.ll_gain;
    j["ll_threshold"] = d.ll_threshold;
    return j;
}

ordered_json psd_json(const PnPsd& psd)
{
    ordered_json j;
    j["carrier_hz"] = psd.carrier_hz;
    j["fs_hz"] = psd.fs_hz;
    j["bin_hz"] = psd.bin_hz;
    j["enbw_hz"] = psd.enbw_hz;
    j["segments"] = psd.segments;
    j["window"] = psd.window;
    j["method"] = psd.method;
    j["convention"] = psd.convention;
    ordered_json pts = ordered_json::array();
    for (const auto& p : psd.report) pts.push_back({{"f_hz", p.f_hz}, {"l_dbchz", p.l_dbc_hz}});
    j["points"] = pts;
    return j;
}

ordered_json spur_json(const SpurMeasurement& s)
{
    return {{"f_hz", s.f_hz}, {"level_dbc", s.level_dbc}, {"resolved", s.resolved}};
}

namespace {
ordered_json outdiv_json(const OutputDividerConfig& c)
{
    return {{"stages", c.selections}, {"ratio", total_ratio(c)}};
}
}  // namespace

ordered_json plan_json(const Plan& p)
{
    ordered_json j;
    j["schema"] = kPlanSchema;
    j["f_ref_hz"] = p.f_ref_hz;
    j["np_plus_s"] = p.np_plus_s;
    j["p"] = p.p;
    j["s"] = p.s;
    j["f_vco_hz"] = p.f_vco_hz;
    j["band_hint"] = p.band_hint;
    j["exact"] = p.exact;
    j["outdiv_a"] = outdiv_json(p.outdiv_a);
    j["f_out_a_hz"] = p.f_out_a_hz;
    j["error_ppm_a"] = p.error_ppm_a;
    if (p.outdiv_b) {
        j["outdiv_b"] = outdiv_json(*p.outdiv_b);
        j["f_out_b_hz"] = *p.f_out_b_hz;
        j["error_ppm_b"] = *p.error_ppm_b;
    } else {
        j["outdiv_b"] = nullptr;
    }
    return j;
}

ordered_json transactions_json(const std::vector<Transaction>& t)
{
    ordered_json a = ordered_json::array();
    for (const auto& x : t) a.push_back({{"address", x.address}, {"value", x.value}});
    return a;
}

ordered_json settings_json(const RegisterSettings& s)
{
    ordered_json j;
    j["p"] = s.p;
    j["s"] = s.s;
    j["band"] = s.band;
    j["auto_band"] = s.auto_band;
    j["outdiv_a"] = outdiv_json(s.outdiv_a);
    j["outdiv_b"] = outdiv_json(s.outdiv_b);
    j["cp_dac"] = s.cp_dac;
    j["icp_a"] = s.cp_dac * kCpDacLsbA;
    j["vco_bias_dac"] = s.vco_bias_dac;
    return j;
}

ordered_json filter_design_json(const FilterDesignSpec& spec, const FilterDesign& d)
{
    ordered_json j;
    j["schema"] = kDesignSchema;
    j["inputs"] = {{"icp_a", spec.icp_a},           {"kvco_hz_per_v", spec.kvco_hz_per_v},
                   {"n_total", spec.n_total},       {"f_c_hz", spec.f_c_hz},
                   {"phase_margin_deg", spec.phase_margin_deg}, {"f_ref_hz", spec.f_ref_hz}};
    j["filter"] = {{"rz_ohm", d.filter.rz_ohm}, {"c1_f", d.filter.c1_f}, {"c2_f", d.filter.c2_f}};
    j["check"] = {{"gain_at_fc", d.check.gain_at_fc}, {"phase_margin_deg", d.check.phase_margin_deg}};
    j["closed_loop_bw_hz"] = closed_loop_bandwidth(d.filter, spec.icp_a, spec.kvco_hz_per_v, spec.n_total);
    return j;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string hex64(std::uint64_t v)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace fsynth
