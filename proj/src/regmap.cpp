#include <algorithm>
#include <cstdio>
#include <sstream>

#include "fsynth/progif.hpp"

namespace fsynth {

namespace {

int bits_for(std::size_t n)
{
    int b = 0;
    while ((std::size_t{1} << b) < n) ++b;
    return b;
}

void check_field(const char* name, int v, int width)
{
    if (v < 0 || v >= (1 << width))
        throw RegisterError(std::string(name) + " value " + std::to_string(v) + " exceeds its " + std::to_string(width) +
                            "-bit field");
}

}  // namespace

bool RegisterSettings::operator==(const RegisterSettings& o) const
{
    return p == o.p && s == o.s && band == o.band && auto_band == o.auto_band &&
           outdiv_a.selections == o.outdiv_a.selections && outdiv_b.selections == o.outdiv_b.selections &&
           cp_dac == o.cp_dac && vco_bias_dac == o.vco_bias_dac;
}

std::uint8_t register_mask(std::uint8_t address)
{
    switch (address) {
        case 0x00: return 0x3F;
        case 0x01: return 0x0F;
        case 0x02: return 0x1F;
        case 0x03:
        case 0x04: return 0xFF;
        case 0x05:
        case 0x06: return 0x1F;
        case 0x07: return 0x00;
        default: throw RegisterError("unmapped register address " + std::to_string(address));
    }
}

void RegisterFile::write(std::uint8_t address, std::uint8_t value)
{
    const std::uint8_t mask = register_mask(address);
    if (address == kStatus) return;
    regs_[address] = value & mask;
}

std::uint8_t RegisterFile::read(std::uint8_t address) const
{
    register_mask(address);
    if (address == kStatus) return (probe_ && probe_()) ? 0x01 : 0x00;
    return regs_[address];
}

void RegisterFile::apply(const std::vector<Transaction>& txns)
{
    for (const auto& t : txns) write(t.address, t.value);
}

std::uint8_t encode_stage_code(const OutputDividerConfig& cfg, const StageSets& sets)
{
    if (cfg.selections.size() != sets.size()) throw RegisterError("stage count does not match the stage sets");
    unsigned code = 0;
    int shift = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const auto it = std::find(sets[i].begin(), sets[i].end(), cfg.selections[i]);
        if (it == sets[i].end())
            throw RegisterError("stage " + std::to_string(i) + " ratio " + std::to_string(cfg.selections[i]) +
                                " is not selectable");
        code |= static_cast<unsigned>(it - sets[i].begin()) << shift;
        shift += bits_for(sets[i].size());
    }
    if (shift > 8) throw RegisterError("stage sets need more than 8 code bits");
    return static_cast<std::uint8_t>(code);
}

OutputDividerConfig decode_stage_code(std::uint8_t code, const StageSets& sets)
{
    OutputDividerConfig cfg;
    cfg.selections.clear();
    int shift = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const int w = bits_for(sets[i].size());
        const unsigned idx = (code >> shift) & ((1u << w) - 1u);
        if (idx >= sets[i].size()) throw RegisterError("invalid stage code " + std::to_string(code));
        cfg.selections.push_back(sets[i][idx]);
        shift += w;
    }
    if (shift < 8 && (code >> shift) != 0) throw RegisterError("stage code has bits set beyond the last stage");
    return cfg;
}

std::vector<Transaction> encode(const RegisterSettings& s, const StageSets& sets)
{
    check_field("P", s.p, 6);
    check_field("S", s.s, 4);
    check_field("band", s.band, 4);
    check_field("cp_dac", s.cp_dac, 5);
    check_field("vco_bias_dac", s.vco_bias_dac, 5);
    auto u8 = [](int v) { return static_cast<std::uint8_t>(v); };
    return {
        {0x00, u8(s.p)},
        {0x01, u8(s.s)},
        {0x02, u8(s.band | (s.auto_band ? 0x10 : 0x00))},
        {0x03, encode_stage_code(s.outdiv_a, sets)},
        {0x04, encode_stage_code(s.outdiv_b, sets)},
        {0x05, u8(s.cp_dac)},
        {0x06, u8(s.vco_bias_dac)},
    };
}

RegisterSettings decode(const RegisterFile& regs, const StageSets& sets)
{
    RegisterSettings s;
    s.p = regs.read(0x00);
    s.s = regs.read(0x01);
    const auto b = regs.read(0x02);
    s.band = b & 0x0F;
    s.auto_band = (b & 0x10) != 0;
    s.outdiv_a = decode_stage_code(regs.read(0x03), sets);
    s.outdiv_b = decode_stage_code(regs.read(0x04), sets);
    s.cp_dac = regs.read(0x05);
    s.vco_bias_dac = regs.read(0x06);
    return s;
}

RegisterSettings settings_from_plan(const Plan& p, const Biases& b)
{
    RegisterSettings s;
    s.p = p.p;
    s.s = p.s;
    s.band = p.band_hint;
    s.auto_band = true;
    s.outdiv_a = p.outdiv_a;
    s.outdiv_b = p.outdiv_b.value_or(p.outdiv_a);
    s.cp_dac = b.cp_dac;
    s.vco_bias_dac = b.vco_bias_dac;
    return s;
}

EncodedPlan encode(const Plan& p, const Biases& b, const StageSets& sets)
{
    EncodedPlan out;
    out.transactions = encode(settings_from_plan(p, b), sets);
    out.regs.apply(out.transactions);
    return out;
}

PllConfig apply_settings(const RegisterSettings& s, PllConfig base)
{
    base.fbdiv = {2, s.p, s.s};
    if (s.auto_band)
        base.forced_band.reset();
    else
        base.forced_band = s.band;
    base.outdiv_a = s.outdiv_a;
    base.outdiv_b = s.outdiv_b;
    base.cp.icp_a = s.cp_dac * kCpDacLsbA;
    return base;
}

std::string to_hex_lines(const std::vector<Transaction>& txns)
{
    std::string out;
    char buf[16];
    for (const auto& t : txns) {
        std::snprintf(buf, sizeof buf, "%02X=%02X\n", t.address, t.value);
        out += buf;
    }
    return out;
}

std::vector<Transaction> parse_hex_lines(const std::string& text)
{
    std::vector<Transaction> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        unsigned a = 0, v = 0;
        char tail = 0;
        if (std::sscanf(line.c_str(), "%2x=%2x%c", &a, &v, &tail) != 2 || line.size() != 5)
            throw RegisterError("malformed transaction line: " + line);
        out.push_back({static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(v)});
    }
    return out;
}

}  // namespace fsynth
