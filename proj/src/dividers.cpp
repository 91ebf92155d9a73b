#include "fsynth/dividers.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace fsynth {

std::vector<std::string> check_feedback_divider(const FeedbackDividerConfig& cfg)
{
    std::vector<std::string> out;
    if (cfg.n != 2) out.push_back("n must be 2 (fixed prescaler)");
    if (cfg.p < 1 || cfg.p > 63) out.push_back("P out of range 1-63");
    if (cfg.s < 0 || cfg.s > 15) out.push_back("S out of range 0-15");
    if (cfg.s > cfg.p) out.push_back("S must not exceed P (pulse-swallow)");
    return out;
}

int fb_ratio(const FeedbackDividerConfig& cfg)
{
    if (auto errs = check_feedback_divider(cfg); !errs.empty()) throw DividerError(errs.front());
    return cfg.n * cfg.p + cfg.s;
}

PulseSwallowCounter::PulseSwallowCounter(const FeedbackDividerConfig& cfg) : cfg_(cfg) { reload(); }

void PulseSwallowCounter::reload()
{
    program_left_ = cfg_.p;
    swallow_left_ = cfg_.s;
}

bool PulseSwallowCounter::clock()
{
    const int modulus = swallow_left_ > 0 ? cfg_.n + 1 : cfg_.n;
    if (++prescaler_count_ < modulus) return false;
    prescaler_count_ = 0;
    if (swallow_left_ > 0) --swallow_left_;
    if (--program_left_ > 0) return false;
    reload();
    return true;
}

FeedbackOutputs fb_divide(const EdgeStream& input, const FeedbackDividerConfig& cfg)
{
    const std::int64_t ratio = fb_ratio(cfg);
    FeedbackOutputs out{{Signal::Div, input.tick, {}}, {Signal::Clk, input.tick, {}}};
    std::int64_t rising = 0;
    for (const auto& e : input.edges) {
        if (e.polarity != Polarity::Rising) continue;
        if (rising % ratio == 0) {
            const std::int64_t k = rising / ratio;
            out.div.edges.push_back({k, Polarity::Rising, e.time});
            out.clk.edges.push_back({k, k % 2 == 0 ? Polarity::Rising : Polarity::Falling, e.time});
        }
        ++rising;
    }
    return out;
}

QuadratureOutputs quadrature_divide(const EdgeStream& input)
{
    QuadratureOutputs out{{Signal::Quad, input.tick, {}}, {Signal::Quad, input.tick, {}}};
    bool i_level = false;
    bool q_level = false;
    for (const auto& e : input.edges) {
        bool& level = e.polarity == Polarity::Rising ? i_level : q_level;
        EdgeStream& s = e.polarity == Polarity::Rising ? out.i : out.q;
        level = !level;
        s.edges.push_back({static_cast<std::int64_t>(s.edges.size()), level ? Polarity::Rising : Polarity::Falling,
                           e.time});
    }
    return out;
}

const StageSets& default_stage_sets()
{
    static const StageSets sets{{1, 5}, {1, 2, 3, 4}, {1, 2}, {1, 2}, {1, 2}};
    return sets;
}

int total_ratio(const OutputDividerConfig& cfg)
{
    int r = 1;
    for (int s : cfg.selections) r *= s;
    return r;
}

std::vector<std::string> check_output_divider(const OutputDividerConfig& cfg, const StageSets& sets)
{
    std::vector<std::string> out;
    if (cfg.selections.size() != sets.size()) {
        out.push_back("expected " + std::to_string(sets.size()) + " stage selections");
        return out;
    }
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (std::find(sets[i].begin(), sets[i].end(), cfg.selections[i]) == sets[i].end())
            out.push_back("stage " + std::to_string(i) + " ratio " + std::to_string(cfg.selections[i]) +
                          " not in its allowed set");
    }
    const int r = total_ratio(cfg);
    if (r < 1 || r > 160) out.push_back("total ratio " + std::to_string(r) + " outside 1-160");
    return out;
}

namespace {

void enumerate(const StageSets& sets, const std::function<void(const std::vector<int>&)>& visit)
{
    std::vector<int> sel(sets.size(), 1);
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == sets.size()) {
            visit(sel);
            return;
        }
        for (int r : sets[i]) {
            sel[i] = r;
            rec(i + 1);
        }
    };
    rec(0);
}

}  // namespace

std::vector<int> outdiv_available_ratios(const StageSets& sets)
{
    std::set<int> ratios;
    enumerate(sets, [&](const std::vector<int>& sel) {
        int r = 1;
        for (int x : sel) r *= x;
        ratios.insert(r);
    });
    return {ratios.begin(), ratios.end()};
}

std::optional<OutputDividerConfig> decompose_ratio(int ratio, const StageSets& sets)
{
    std::optional<std::vector<int>> best;
    auto rank = [](const std::vector<int>& sel) {
        int active = 0;
        int last = 1;
        for (int x : sel)
            if (x != 1) {
                ++active;
                last = x;
            }
        const bool even_tail = last == 1 || last % 2 == 0;
        return std::make_pair(even_tail ? 0 : 1, active);
    };
    enumerate(sets, [&](const std::vector<int>& sel) {
        int r = 1;
        for (int x : sel) r *= x;
        if (r != ratio) return;
        if (!best || rank(sel) < rank(*best) || (rank(sel) == rank(*best) && sel < *best)) best = sel;
    });
    if (!best) return std::nullopt;
    return OutputDividerConfig{*best};
}

OutputDivider::OutputDivider(const OutputDividerConfig& cfg)
{
    for (int r : cfg.selections)
        if (r != 1) stages_.push_back({r, 0});
}

std::optional<Polarity> OutputDivider::clock(Polarity in)
{
    std::optional<Polarity> edge = in;
    for (auto& st : stages_) {
        if (!edge || *edge != Polarity::Rising) return std::nullopt;
        const int c = st.counter;
        st.counter = (c + 1) % st.ratio;
        if (c == 0)
            edge = Polarity::Rising;
        else if (c == st.ratio / 2)
            edge = Polarity::Falling;
        else
            edge.reset();
    }
    return edge;
}

EdgeStream outdiv_divide(const EdgeStream& input, const OutputDividerConfig& cfg, Signal out_signal)
{
    OutputDivider div(cfg);
    EdgeStream out{out_signal, input.tick, {}};
    for (const auto& e : input.edges) {
        if (auto p = div.clock(e.polarity))
            out.edges.push_back({static_cast<std::int64_t>(out.edges.size()), *p, e.time});
    }
    return out;
}

}  // namespace fsynth
