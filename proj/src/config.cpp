#include "fsynth/config.hpp"

#include <charconv>
#include <cmath>
#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace fsynth {

namespace {

std::string join(const std::vector<std::string>& parts, const char* sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

double parse_double(const std::string& text)
{
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) throw std::invalid_argument("not a number");
    if (!std::isfinite(v)) throw std::invalid_argument("must be finite");
    return v;
}

template <typename Int>
Int parse_int(const std::string& text)
{
    const std::string t = trim(text);
    Int v{};
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) throw std::invalid_argument("not an integer");
    return v;
}

std::string format_int_list(const std::vector<int>& v)
{
    std::vector<std::string> parts;
    for (int x : v) parts.push_back(std::to_string(x));
    return join(parts, ",");
}

std::vector<int> parse_int_list(const std::string& s)
{
    std::vector<int> out;
    for (const auto& p : split(s, ',')) out.push_back(parse_int<int>(p));
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

/// One config key: how to read it into a PllConfig and how to print it.
struct Field {
    const char* section;
    const char* key;
    std::function<void(PllConfig&, const std::string&)> read;
    std::function<std::optional<std::string>(const PllConfig&)> write;  ///< nullopt: omit
};

Field real(const char* section, const char* key, double PllConfig::*member)
{
    return {section, key, [member](PllConfig& c, const std::string& s) { c.*member = parse_double(s); },
            [member](const PllConfig& c) { return format_number(c.*member); }};
}

template <typename Sub>
Field real(const char* section, const char* key, Sub PllConfig::*sub, double Sub::*member)
{
    return {section, key, [=](PllConfig& c, const std::string& s) { (c.*sub).*member = parse_double(s); },
            [=](const PllConfig& c) { return format_number((c.*sub).*member); }};
}

template <typename Sub>
Field integer(const char* section, const char* key, Sub PllConfig::*sub, int Sub::*member)
{
    return {section, key, [=](PllConfig& c, const std::string& s) { (c.*sub).*member = parse_int<int>(s); },
            [=](const PllConfig& c) { return std::to_string((c.*sub).*member); }};
}

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(real("pll", "f_ref_hz", &PllConfig::f_ref_hz));
        f.push_back(real("pll", "vdd_v", &PllConfig::vdd_v));
        f.push_back(real("pll", "t_reset_s", &PllConfig::pfd, &PfdParams::t_reset_s));
        f.push_back(real("pll", "icp_a", &PllConfig::cp, &ChargePumpParams::icp_a));
        f.push_back(real("pll", "cp_mismatch", &PllConfig::cp, &ChargePumpParams::mismatch));
        f.push_back(real("pll", "cp_leakage_a", &PllConfig::cp, &ChargePumpParams::leakage_a));

        f.push_back(real("filter", "rz_ohm", &PllConfig::filter, &LoopFilterParams::rz_ohm));
        f.push_back(real("filter", "c1_f", &PllConfig::filter, &LoopFilterParams::c1_f));
        f.push_back(real("filter", "c2_f", &PllConfig::filter, &LoopFilterParams::c2_f));

        f.push_back(real("vco", "f_min_hz", &PllConfig::vco, &VcoParams::f_min_hz));
        f.push_back(real("vco", "f_max_hz", &PllConfig::vco, &VcoParams::f_max_hz));
        f.push_back(integer("vco", "n_caps", &PllConfig::vco, &VcoParams::n_caps));
        f.push_back(real("vco", "kvco_hz_per_v", &PllConfig::vco, &VcoParams::kvco_hz_per_v));
        f.push_back(real("vco", "kvdd_hz_per_v", &PllConfig::vco, &VcoParams::kvdd_hz_per_v));
        f.push_back(real("vco", "kvddl_hz_per_v", &PllConfig::vco, &VcoParams::kvddl_hz_per_v));
        f.push_back(real("vco", "vddl_v", &PllConfig::vco, &VcoParams::vddl_v));
        f.push_back(real("vco", "v_mid_v", &PllConfig::vco, &VcoParams::v_mid_v));
        f.push_back(real("vco", "band_overlap", &PllConfig::vco, &VcoParams::band_overlap));
        f.push_back({"vco", "band",
                     [](PllConfig& c, const std::string& s) {
                         if (trim(s) == "auto")
                             c.forced_band.reset();
                         else
                             c.forced_band = parse_int<int>(s);
                     },
                     [](const PllConfig& c) { return c.forced_band ? std::to_string(*c.forced_band) : "auto"; }});

        f.push_back(integer("divider", "n", &PllConfig::fbdiv, &FeedbackDividerConfig::n));
        f.push_back(integer("divider", "p", &PllConfig::fbdiv, &FeedbackDividerConfig::p));
        f.push_back(integer("divider", "s", &PllConfig::fbdiv, &FeedbackDividerConfig::s));
        f.push_back({"divider", "stage_sets",
                     [](PllConfig& c, const std::string& s) {
                         c.stage_sets.clear();
                         for (const auto& part : split(s, ';')) c.stage_sets.push_back(parse_int_list(part));
                     },
                     [](const PllConfig& c) {
                         std::vector<std::string> parts;
                         for (const auto& set : c.stage_sets) parts.push_back(format_int_list(set));
                         return join(parts, ";");
                     }});
        f.push_back({"divider", "outdiv_a",
                     [](PllConfig& c, const std::string& s) { c.outdiv_a.selections = parse_int_list(s); },
                     [](const PllConfig& c) { return format_int_list(c.outdiv_a.selections); }});
        f.push_back({"divider", "outdiv_b",
                     [](PllConfig& c, const std::string& s) { c.outdiv_b.selections = parse_int_list(s); },
                     [](const PllConfig& c) { return format_int_list(c.outdiv_b.selections); }});

        f.push_back({"noise", "vco_pn_dbc_hz",
                     [](PllConfig& c, const std::string& s) {
                         if (trim(s) == "none") {
                             c.noise.vco_pn.reset();
                             return;
                         }
                         if (!c.noise.vco_pn) c.noise.vco_pn.emplace();
                         c.noise.vco_pn->l_dbc_hz = parse_double(s);
                     },
                     [](const PllConfig& c) {
                         return c.noise.vco_pn ? format_number(c.noise.vco_pn->l_dbc_hz) : std::string("none");
                     }});
        f.push_back({"noise", "vco_pn_offset_hz",
                     [](PllConfig& c, const std::string& s) {
                         const double v = parse_double(s);
                         if (!c.noise.vco_pn) c.noise.vco_pn.emplace();
                         c.noise.vco_pn->offset_hz = v;
                     },
                     [](const PllConfig& c) -> std::optional<std::string> {
                         if (!c.noise.vco_pn) return std::nullopt;
                         return format_number(c.noise.vco_pn->offset_hz);
                     }});
        f.push_back({"noise", "ref_rj_s", [](PllConfig& c, const std::string& s) { c.noise.ref_rj_s = parse_double(s); },
                     [](const PllConfig& c) { return format_number(c.noise.ref_rj_s); }});
        f.push_back({"noise", "ripple_v",
                     [](PllConfig& c, const std::string& s) {
                         const double v = parse_double(s);
                         if (!c.noise.ripple) c.noise.ripple.emplace();
                         c.noise.ripple->v_m = v;
                     },
                     [](const PllConfig& c) -> std::optional<std::string> {
                         if (!c.noise.ripple) return std::nullopt;
                         return format_number(c.noise.ripple->v_m);
                     }});
        f.push_back({"noise", "ripple_f_hz",
                     [](PllConfig& c, const std::string& s) {
                         const double v = parse_double(s);
                         if (!c.noise.ripple) c.noise.ripple.emplace(SupplyRipple{0.0, v});
                         c.noise.ripple->f_m_hz = v;
                     },
                     [](const PllConfig& c) -> std::optional<std::string> {
                         if (!c.noise.ripple) return std::nullopt;
                         return format_number(c.noise.ripple->f_m_hz);
                     }});
        f.push_back({"noise", "supply_noise_v_rthz",
                     [](PllConfig& c, const std::string& s) { c.noise.supply_noise_v_rthz = parse_double(s); },
                     [](const PllConfig& c) { return format_number(c.noise.supply_noise_v_rthz); }});
        f.push_back({"noise", "buffer_dcd_s",
                     [](PllConfig& c, const std::string& s) { c.noise.buffer_dcd_s = parse_double(s); },
                     [](const PllConfig& c) { return format_number(c.noise.buffer_dcd_s); }});

        f.push_back(real("lockdet", "alpha", &PllConfig::lockdet, &LockDetectorParams::alpha));
        f.push_back(real("lockdet", "alpha_low", &PllConfig::lockdet, &LockDetectorParams::alpha_low));
        f.push_back(real("lockdet", "r_ratio", &PllConfig::lockdet, &LockDetectorParams::r_ratio));
        f.push_back(real("lockdet", "tau_s", &PllConfig::lockdet, &LockDetectorParams::tau_s));

        f.push_back(real("sim", "duration_s", &PllConfig::sim, &SimControl::duration_s));
        f.push_back({"sim", "seed", [](PllConfig& c, const std::string& s) { c.sim.seed = parse_int<std::uint64_t>(s); },
                     [](const PllConfig& c) { return std::to_string(c.sim.seed); }});
        f.push_back(real("sim", "sample_interval_s", &PllConfig::sim, &SimControl::sample_interval_s));
        f.push_back({"sim", "record_edges",
                     [](PllConfig& c, const std::string& s) {
                         c.sim.record_edges.clear();
                         if (trim(s).empty() || trim(s) == "none") return;
                         for (const auto& item : split(s, ',')) {
                             const auto colon = item.find(':');
                             const std::string name = trim(item.substr(0, colon));
                             const auto sig = parse_signal(name);
                             if (!sig) throw std::invalid_argument("unknown signal '" + name + "'");
                             RecordSpec r{*sig, 1};
                             if (colon != std::string::npos) r.every = parse_int<std::int64_t>(item.substr(colon + 1));
                             c.sim.record_edges.push_back(r);
                         }
                     },
                     [](const PllConfig& c) {
                         std::vector<std::string> parts;
                         for (const auto& r : c.sim.record_edges) {
                             std::string p(to_string(r.signal));
                             if (r.every != 1) p += ":" + std::to_string(r.every);
                             parts.push_back(p);
                         }
                         return parts.empty() ? std::string("none") : join(parts, ",");
                     }});
        f.push_back({"sim", "vctrl_init_v",
                     [](PllConfig& c, const std::string& s) {
                         if (trim(s) == "auto")
                             c.sim.vctrl_init_v.reset();
                         else
                             c.sim.vctrl_init_v = parse_double(s);
                     },
                     [](const PllConfig& c) {
                         return c.sim.vctrl_init_v ? format_number(*c.sim.vctrl_init_v) : std::string("auto");
                     }});
        f.push_back(real("sim", "ref_step_at_s", &PllConfig::sim, &SimControl::ref_step_at_s));
        f.push_back(real("sim", "ref_step_s", &PllConfig::sim, &SimControl::ref_step_s));
        return f;
    }();
    return table;
}

}  // namespace

std::string format_number(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

ConfigError::ConfigError(std::vector<std::string> messages)
    : std::runtime_error(join(messages, "; ")), messages_(std::move(messages))
{
}

PllConfig parse_config(const std::string& text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError({std::string("syntax: ") + e.what()});
    }

    PllConfig cfg;
    std::vector<std::string> errors;
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            if (name == "schema") {
                if (node.data() != kConfigSchema) errors.push_back("schema: unsupported '" + node.data() + "'");
            } else {
                errors.push_back(name + ": key outside any section");
            }
            continue;
        }
        for (const auto& [key, value] : node) {
            const auto& table = fields();
            auto it = std::find_if(table.begin(), table.end(),
                                   [&](const Field& f) { return name == f.section && key == f.key; });
            if (it == table.end()) {
                errors.push_back(name + "." + key + ": unknown key");
                continue;
            }
            try {
                it->read(cfg, value.data());
            } catch (const std::exception& e) {
                errors.push_back(name + "." + key + ": " + e.what() + " ('" + value.data() + "')");
            }
        }
    }
    cfg.lockdet.vdd_v = cfg.vdd_v;
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return cfg;
}

PllConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot read '" + path + "'"});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const PllConfig& cfg)
{
    std::string out = std::string("schema = ") + kConfigSchema + "\n";
    std::string section;
    for (const auto& f : fields()) {
        if (section != f.section) {
            section = f.section;
            out += "\n[" + section + "]\n";
        }
        if (auto value = f.write(cfg)) out += std::string(f.key) + " = " + *value + "\n";
    }
    return out;
}

std::vector<Violation> validate_config(const PllConfig& c)
{
    std::vector<Violation> v;
    auto need = [&](bool ok, const char* field, std::string msg) {
        if (!ok) v.push_back({field, std::move(msg)});
    };
    auto finite = [](double x) { return std::isfinite(x); };

    need(finite(c.f_ref_hz) && c.f_ref_hz > 0, "pll.f_ref_hz", "reference frequency must be positive");
    need(finite(c.vdd_v) && c.vdd_v > 0, "pll.vdd_v", "VDD must be positive");
    need(c.pfd.t_reset_s > 0 && c.pfd.t_reset_s < 1.0 / (10.0 * c.f_ref_hz), "pll.t_reset_s",
         "reset delay must lie in (0, 1/(10 f_ref))");
    need(c.cp.icp_a > 0, "pll.icp_a", "charge-pump current must be positive");
    need(std::abs(c.cp.mismatch) < 0.5, "pll.cp_mismatch", "|mismatch| must be < 0.5");
    need(finite(c.cp.leakage_a), "pll.cp_leakage_a", "leakage must be finite");

    need(c.filter.rz_ohm > 0, "filter.rz_ohm", "must be positive");
    need(c.filter.c1_f > 0, "filter.c1_f", "must be positive");
    need(c.filter.c2_f > 0, "filter.c2_f", "must be positive");
    need(c.filter.c2_f < c.filter.c1_f, "filter.c2_f", "c2 must be smaller than c1");

    need(c.vco.f_min_hz > 0 && c.vco.f_min_hz < c.vco.f_max_hz, "vco.f_min_hz", "need 0 < f_min < f_max");
    need(c.vco.n_caps >= 1, "vco.n_caps", "need at least one switched capacitor");
    need(c.vco.kvco_hz_per_v > 0, "vco.kvco_hz_per_v", "control gain must be positive");
    need(c.vco.v_mid_v > 0 && c.vco.v_mid_v < c.vdd_v, "vco.v_mid_v", "v_mid must lie in (0, VDD)");
    need(c.vco.band_overlap >= 0 && c.vco.band_overlap < 1, "vco.band_overlap", "overlap must lie in [0, 1)");
    if (c.forced_band)
        need(*c.forced_band >= 0 && *c.forced_band <= c.vco.n_caps, "vco.band", "band out of range 0-n_caps");

    for (const auto& m : check_feedback_divider(c.fbdiv))
        v.push_back({m.rfind("S ", 0) == 0 ? "divider.s" : m.rfind("P ", 0) == 0 ? "divider.p" : "divider.n", m});
    for (const auto& set : c.stage_sets)
        for (int r : set) need(r >= 1, "divider.stage_sets", "stage ratios must be >= 1");
    for (const auto& m : check_output_divider(c.outdiv_a, c.stage_sets)) v.push_back({"divider.outdiv_a", m});
    for (const auto& m : check_output_divider(c.outdiv_b, c.stage_sets)) v.push_back({"divider.outdiv_b", m});

    need(c.lockdet.alpha_low > 0 && c.lockdet.alpha_low < c.lockdet.alpha && c.lockdet.alpha < 1, "lockdet.alpha",
         "need 0 < alpha_low < alpha < 1");
    need(c.lockdet.r_ratio > 0, "lockdet.r_ratio", "must be positive");
    need(c.lockdet.tau_s >= 50.0 / c.f_ref_hz, "lockdet.tau_s", "tau must span at least 50 reference periods");

    if (c.noise.vco_pn) need(c.noise.vco_pn->offset_hz > 0, "noise.vco_pn_offset_hz", "offset must be positive");
    need(c.noise.ref_rj_s >= 0, "noise.ref_rj_s", "must be non-negative");
    if (c.noise.ripple) {
        need(c.noise.ripple->v_m >= 0, "noise.ripple_v", "must be non-negative");
        need(c.noise.ripple->f_m_hz > 0, "noise.ripple_f_hz", "must be positive");
    }
    need(c.noise.supply_noise_v_rthz >= 0, "noise.supply_noise_v_rthz", "must be non-negative");
    need(c.noise.buffer_dcd_s >= 0, "noise.buffer_dcd_s", "must be non-negative");

    need(c.sim.duration_s > 0, "sim.duration_s", "duration must be positive");
    need(c.sim.sample_interval_s > 0, "sim.sample_interval_s", "sample interval must be positive");
    for (const auto& r : c.sim.record_edges) need(r.every >= 1, "sim.record_edges", "decimation must be >= 1");
    need(c.sim.ref_step_at_s >= 0, "sim.ref_step_at_s", "must be non-negative");
    need(std::abs(c.sim.ref_step_s) < 0.5 / c.f_ref_hz, "sim.ref_step_s", "step must be under half a reference period");

    if (!c.forced_band && check_feedback_divider(c.fbdiv).empty()) {
        const double f = c.f_vco_target();
        need(f >= c.vco.f_min_hz && f <= c.vco.f_max_hz, "divider.p",
             "implied VCO frequency " + format_number(f) + " Hz outside [" + format_number(c.vco.f_min_hz) + ", " +
                 format_number(c.vco.f_max_hz) + "]");
    }
    return v;
}

}  // namespace fsynth
