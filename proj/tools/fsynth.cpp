// fsynth: command-line front end for the synthesizer simulator.
//
// Exit codes: 0 ok, 2 invalid input, 3 runtime diagnostic, 4 record too short.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fsynth/analysis.hpp"
#include "fsynth/config.hpp"
#include "fsynth/design.hpp"
#include "fsynth/engine.hpp"
#include "fsynth/progif.hpp"
#include "fsynth/random.hpp"
#include "fsynth/trace_io.hpp"

namespace fs = std::filesystem;
using namespace fsynth;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitShortRecord = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path default_out_dir()
{
    if (const char* env = std::getenv("FSYNTH_OUT_DIR"); env && *env) return env;
    return "fsynth_out";
}

std::string read_text(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_manifest(const fs::path& dir, const std::string& subcommand, const std::string& config_path,
                    const std::string& config_text, std::optional<std::uint64_t> seed,
                    const std::vector<std::string>& outputs, double wall_s)
{
    ordered_json m;
    m["schema"] = kManifestSchema;
    m["tool_version"] = kToolVersion;
    m["subcommand"] = subcommand;
    m["config_path"] = config_path;
    m["config_hash"] = "fnv1a64:" + hex64(fnv1a64(config_text));
    m["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
    m["random_stream"] = std::string(kRandomStreamVersion);
    m["outputs"] = outputs;
    m["wall_clock_s"] = wall_s;
    write_file_atomic(dir / "manifest.json", dump(m));
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
};

int cmd_simulate(const SimulateArgs& a)
{
    const auto t0 = std::chrono::steady_clock::now();
    const std::string text = read_text(a.config);
    PllConfig cfg = parse_config(text);
    if (a.seed) cfg.sim.seed = *a.seed;
    if (a.duration) cfg.sim.duration_s = *a.duration;

    const SimTrace trace = simulate(cfg);

    const fs::path dir = a.out.empty() ? default_out_dir() : fs::path(a.out);
    fs::create_directories(dir);
    std::vector<std::string> outputs;
    auto put = [&](const std::string& name, const std::string& content) {
        write_file_atomic(dir / name, content);
        outputs.push_back(name);
    };
    {
        std::ostringstream s;
        write_edges_csv(s, trace.edges, trace.tick_s);
        put("edges.csv", s.str());
    }
    {
        std::ostringstream s;
        write_waveforms_csv(s, trace.waveforms);
        put("waveforms.csv", s.str());
    }
    {
        std::ostringstream s;
        write_freq_error_csv(s, trace.clk_freq_error);
        put("freq_error.csv", s.str());
    }
    auto summary = summary_json(trace);
    summary["seed"] = cfg.sim.seed;
    put("summary.json", dump(summary));
    // effective configuration, so a run can be repeated from its output directory
    put("config.ini", serialize_config(cfg));

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(dir, "simulate", a.config, text, cfg.sim.seed, outputs, wall);
    std::cout << dump(summary);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
    std::string input;
    std::string out;
    std::string signal = "CLK";
    std::optional<double> f0;
    bool tie = false;
    bool pn = false;
    bool decompose = false;
    std::vector<double> spur;
    double f_low = 10e3;
    double f_high = 10e6;
    double t_start = 0.0;
    std::optional<double> floor_s;
};

bool has_both_polarities(Signal s)
{
    return s != Signal::Ref && s != Signal::Div && s != Signal::Vco;
}

int cmd_analyze(const AnalyzeArgs& a)
{
    const auto t0 = std::chrono::steady_clock::now();
    fs::path edges_path = a.input;
    if (fs::is_directory(edges_path)) edges_path /= "edges.csv";
    const std::string text = read_text(edges_path);
    EdgeMap edges;
    {
        std::istringstream in(text);
        try {
            edges = read_edges_csv(in);
        } catch (const TraceFormatError& e) {
            throw UsageError(edges_path.string() + ": " + e.what());
        }
    }
    const auto sig = parse_signal(a.signal);
    if (!sig) throw UsageError("unknown signal " + a.signal);
    const auto it = edges.find(*sig);
    if (it == edges.end() || it->second.empty()) throw UsageError("signal " + a.signal + " has no edges in " + edges_path.string());
    const EdgeStream stream = it->second.after(a.t_start);
    const EdgeStream rising = stream.only(Polarity::Rising);

    const bool any = a.tie || a.pn || a.decompose || !a.spur.empty();
    const bool do_tie = a.tie || !any;

    ordered_json j;
    j["schema"] = kAnalysisSchema;
    j["input"] = edges_path.string();
    j["signal"] = a.signal;
    j["t_start_s"] = a.t_start;

    const fs::path dir = a.out.empty() ? default_out_dir() : fs::path(a.out);
    fs::create_directories(dir);
    std::vector<std::string> outputs;

    // TIE runs over every recorded transition so duty-cycle distortion shows up.
    std::optional<TieSeries> t;
    if (do_tie || a.decompose) t = tie(stream);
    double f0 = 0.0;
    if (a.f0) {
        f0 = *a.f0;
    } else {
        const double per = tie(rising).period_s;
        f0 = 1.0 / ((has_both_polarities(*sig) ? 2.0 : 1.0) * per);
    }
    j["carrier_hz"] = f0;

    if (do_tie) {
        j["tie"] = tie_json(*t);
        if (a.floor_s) j["tie"]["rms_floor_removed_s"] = subtract_floor(rms(t->residual_s), *a.floor_s);
        std::ostringstream s;
        write_tie_histogram_csv(s, *t);
        write_file_atomic(dir / "tie_hist.csv", s.str());
        outputs.push_back("tie_hist.csv");
    }
    if (a.decompose) {
        const auto d = decompose(*t);
        j["rj_s"] = d.rj_s;
        j["dj_s"] = d.dj_s;
        j["model"] = d.model == JitterModel::Bimodal ? "bimodal" : "unimodal";
        j["decomposition"] = decomposition_json(d);
    }
    if (a.pn) {
        PsdOptions o;
        o.f_low_hz = a.f_low;
        o.f_high_hz = a.f_high;
        const PnPsd psd = pn_psd(stream, f0, o);
        auto pj = psd_json(psd);
        j["psd"] = pj["points"];
        pj.erase("points");
        j["psd_info"] = pj;
        std::ostringstream s;
        write_psd_csv(s, psd);
        write_file_atomic(dir / "psd.csv", s.str());
        outputs.push_back("psd.csv");
    }
    if (!a.spur.empty()) {
        ordered_json arr = ordered_json::array();
        for (double fm : a.spur) arr.push_back(spur_json(spur_level(stream, f0, fm)));
        j["spurs"] = arr;
    }
    if (fs::path summary = fs::path(a.input) / "summary.json"; fs::is_directory(a.input) && fs::exists(summary)) {
        const auto sj = ordered_json::parse(read_text(summary));
        if (sj.contains("lock_time_s")) j["lock_time_s"] = sj["lock_time_s"];
    }

    write_file_atomic(dir / "analysis.json", dump(j));
    outputs.push_back("analysis.json");
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(dir, "analyze", edges_path.string(), text, std::nullopt, outputs, wall);
    std::cout << dump(j);
    return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_budget(const std::string& kind, const std::vector<double>& v)
{
    auto need = [&](std::size_t n, const char* usage) {
        if (v.size() != n) throw UsageError(std::string("budget ") + kind + " expects: " + usage);
    };
    ordered_json j;
    j["schema"] = kBudgetSchema;
    j["kind"] = kind;
    if (kind == "spur") {
        need(3, "k_push_hz_per_v v_m f_m_hz");
        const auto r = spur_amplitude(v[0], v[1], v[2]);
        j["inputs"] = {{"k_push_hz_per_v", v[0]}, {"v_m", v[1]}, {"f_m_hz", v[2]}};
        j["level_dbc"] = r.level_dbc;
        j["modulation_index"] = r.modulation_index;
        j["narrowband"] = r.narrowband;
    } else if (kind == "psrr") {
        need(4, "v_in f_m_hz k_push_hz_per_v spur_target_dbc");
        const auto r = required_psrr(v[0], v[1], v[2], v[3]);
        j["inputs"] = {{"v_in", v[0]}, {"f_m_hz", v[1]}, {"k_push_hz_per_v", v[2]}, {"spur_target_dbc", v[3]}};
        j["psrr_db"] = r.psrr_db;
        j["v_allowed_v"] = r.v_allowed_v;
        j["already_compliant"] = r.already_compliant;
        j["published"] = {{"psrr_db", published::kPsrrDb}, {"delta_db", r.psrr_db - published::kPsrrDb},
                          {"note", "published worked value for 10 mV, 10 MHz, -60 dBc; not reproducible from the formula"}};
    } else if (kind == "pn") {
        need(3, "vn_v_rthz k_push_hz_per_v delta_f_hz");
        j["inputs"] = {{"vn_v_rthz", v[0]}, {"k_push_hz_per_v", v[1]}, {"delta_f_hz", v[2]}};
        j["l_dbc_hz"] = supply_pn(v[0], v[1], v[2]);
    } else if (kind == "vnmax") {
        need(3, "l_target_dbc_hz k_push_hz_per_v delta_f_hz");
        const double vn = max_supply_noise(v[0], v[1], v[2]);
        j["inputs"] = {{"l_target_dbc_hz", v[0]}, {"k_push_hz_per_v", v[1]}, {"delta_f_hz", v[2]}};
        j["vn_max_v_rthz"] = vn;
        j["published"] = {{"vn_max_v_rthz", published::kMaxSupplyNoiseVRtHz},
                          {"delta_db", 20.0 * std::log10(vn / published::kMaxSupplyNoiseVRtHz)},
                          {"note", "published worked value for -110 dBc/Hz at 1 MHz"}};
    } else {
        throw UsageError("budget kind must be spur, pn, psrr or vnmax");
    }
    std::cout << dump(j);
    return kExitOk;
}

int cmd_design_filter(const FilterDesignSpec& spec)
{
    const auto d = design_loop_filter(spec);
    std::cout << dump(filter_design_json(spec, d));
    return kExitOk;
}

PlanRequest make_request(const std::vector<double>& v)
{
    if (v.size() < 2 || v.size() > 3) throw UsageError("expects: f_ref_hz f_out_a_hz [f_out_b_hz]");
    PlanRequest r{v[0], v[1], std::nullopt};
    if (v.size() == 3) r.f_out_b_hz = v[2];
    return r;
}

int cmd_plan(const std::vector<double>& v, const Biases& b, bool hex)
{
    const Plan p = plan(make_request(v));
    const auto enc = encode(p, b);
    if (hex) {
        std::cout << to_hex_lines(enc.transactions);
        return kExitOk;
    }
    auto j = plan_json(p);
    j["regmap"] = kRegmapVersion;
    j["transactions"] = transactions_json(enc.transactions);
    std::cout << dump(j);
    return kExitOk;
}

int cmd_regmap(const std::string& action, const std::string& arg, const std::string& config_path)
{
    ordered_json j;
    j["schema"] = kRegmapVersion;
    if (action == "decode") {
        RegisterFile regs;
        try {
            regs.apply(parse_hex_lines(read_text(arg)));
        } catch (const RegisterError& e) {
            throw UsageError(e.what());
        }
        std::optional<SimTrace> trace;
        if (!config_path.empty()) {
            // attach a simulation so the status register reports its lock state
            PllConfig cfg = apply_settings(decode(regs), parse_config(read_text(config_path)));
            trace = simulate(cfg);
            regs.attach([&trace] { return trace->summary.locked_at_end; });
        }
        j["settings"] = settings_json(decode(regs));
        j["status"] = regs.read(RegisterFile::kStatus);
    } else if (action == "encode") {
        // input: a settings object as printed by `regmap decode`
        ordered_json in;
        try {
            in = ordered_json::parse(read_text(arg));
            const auto& s = in.contains("settings") ? in["settings"] : in;
            RegisterSettings rs;
            rs.p = s.at("p").get<int>();
            rs.s = s.at("s").get<int>();
            rs.band = s.at("band").get<int>();
            rs.auto_band = s.at("auto_band").get<bool>();
            rs.outdiv_a.selections = s.at("outdiv_a").at("stages").get<std::vector<int>>();
            rs.outdiv_b.selections = s.at("outdiv_b").at("stages").get<std::vector<int>>();
            rs.cp_dac = s.at("cp_dac").get<int>();
            rs.vco_bias_dac = s.at("vco_bias_dac").get<int>();
            std::cout << to_hex_lines(encode(rs));
        } catch (const nlohmann::json::exception& e) {
            throw UsageError(std::string("bad settings file: ") + e.what());
        }
        return kExitOk;
    } else {
        throw UsageError("regmap action must be encode or decode");
    }
    std::cout << dump(j);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Behavioral simulator and analysis toolkit for an integer-N frequency synthesizer"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    SimulateArgs sim;
    auto* s_sim = app.add_subcommand("simulate", "Run a closed-loop simulation");
    s_sim->add_option("config", sim.config, "Configuration file")->required();
    s_sim->add_option("--out", sim.out, "Output directory (default $FSYNTH_OUT_DIR or ./fsynth_out)");
    s_sim->add_option("--seed", sim.seed, "Override the configured seed");
    s_sim->add_option("--duration", sim.duration, "Override the simulated duration (s)");

    AnalyzeArgs an;
    auto* s_an = app.add_subcommand("analyze", "Analyze a recorded edge trace");
    s_an->add_option("input", an.input, "edges.csv or a simulate output directory")->required();
    s_an->add_option("--out", an.out, "Output directory");
    s_an->add_option("--signal", an.signal, "Signal to analyze")->capture_default_str();
    s_an->add_option("--f0", an.f0, "Nominal carrier frequency (Hz)");
    s_an->add_flag("--tie", an.tie, "TIE statistics and histogram");
    s_an->add_flag("--pn", an.pn, "Phase-noise PSD");
    s_an->add_flag("--decompose", an.decompose, "RJ/DJ decomposition");
    s_an->add_option("--spur", an.spur, "Spur offset(s) to measure (Hz)");
    s_an->add_option("--f-low", an.f_low, "PSD lower offset (Hz)")->capture_default_str();
    s_an->add_option("--f-high", an.f_high, "PSD upper offset (Hz)")->capture_default_str();
    s_an->add_option("--t-start", an.t_start, "Ignore edges before this time (s)")->capture_default_str();
    s_an->add_option("--floor", an.floor_s, "Instrument jitter floor to remove in quadrature (s rms)");

    std::string budget_kind;
    std::vector<double> budget_vals;
    auto* s_bu = app.add_subcommand("budget", "Closed-form supply budgets");
    s_bu->add_option("kind", budget_kind, "spur | pn | psrr | vnmax")->required();
    s_bu->add_option("values", budget_vals, "Numeric arguments")->required();

    FilterDesignSpec fspec;
    auto* s_df = app.add_subcommand("design-filter", "Synthesize the passive loop filter");
    s_df->add_option("--icp", fspec.icp_a, "Charge-pump current (A)")->capture_default_str();
    s_df->add_option("--kvco", fspec.kvco_hz_per_v, "VCO gain (Hz/V)")->capture_default_str();
    s_df->add_option("--n", fspec.n_total, "Total VCO-to-PFD division")->capture_default_str();
    s_df->add_option("--fc", fspec.f_c_hz, "Open-loop crossover (Hz)")->capture_default_str();
    s_df->add_option("--pm", fspec.phase_margin_deg, "Phase margin (deg)")->capture_default_str();
    s_df->add_option("--fref", fspec.f_ref_hz, "Reference frequency (Hz)")->capture_default_str();

    std::vector<double> plan_vals;
    Biases biases;
    bool plan_hex = false;
    auto* s_pl = app.add_subcommand("plan", "Plan dividers for target output frequencies");
    s_pl->add_option("freqs", plan_vals, "f_ref f_out_a [f_out_b] (Hz)")->required();
    s_pl->add_option("--cp-dac", biases.cp_dac, "Charge-pump DAC code")->capture_default_str();
    s_pl->add_option("--bias-dac", biases.vco_bias_dac, "VCO bias DAC code")->capture_default_str();
    s_pl->add_flag("--hex", plan_hex, "Print register writes as AA=VV lines");

    std::string rm_action, rm_file, rm_config;
    auto* s_rm = app.add_subcommand("regmap", "Register-map emulation");
    s_rm->add_option("action", rm_action, "decode | encode")->required();
    s_rm->add_option("file", rm_file, "decode: AA=VV transaction file; encode: settings JSON")->required();
    s_rm->add_option("--attach", rm_config, "Simulate this config with the decoded settings and report LOCK");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalid;
    }

    try {
        if (*s_sim) return cmd_simulate(sim);
        if (*s_an) return cmd_analyze(an);
        if (*s_bu) return cmd_budget(budget_kind, budget_vals);
        if (*s_df) return cmd_design_filter(fspec);
        if (*s_pl) return cmd_plan(plan_vals, biases, plan_hex);
        if (*s_rm) return cmd_regmap(rm_action, rm_file, rm_config);
    } catch (const ConfigError& e) {
        std::cerr << "invalid configuration:\n";
        for (const auto& m : e.messages()) std::cerr << "  " << m << '\n';
        return kExitInvalid;
    } catch (const InsufficientRecord& e) {
        std::cerr << "insufficient record: " << e.what() << '\n';
        return kExitShortRecord;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::invalid_argument& e) {  // DesignError, PlanError, RegisterError
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const SimulationError& e) {
        std::cerr << "simulation stopped: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const AnalysisError& e) {
        std::cerr << "analysis failed: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
