#include "fsynth/timebase.hpp"

#include <cmath>

namespace fsynth {

namespace {
constexpr std::string_view kSignalNames[] = {"REF", "DIV", "CLK", "VCO", "QUAD", "OUT_A", "OUT_B", "UP", "DN", "LOCK"};
}

std::string_view to_string(Signal s) { return kSignalNames[static_cast<std::size_t>(s)]; }

std::optional<Signal> parse_signal(std::string_view name)
{
    for (auto s : kAllSignals)
        if (to_string(s) == name) return s;
    return std::nullopt;
}

Timestamp Timestamp::from_seconds(double t, double tick)
{
    const double whole = std::floor(t / tick);
    const auto cycle = static_cast<std::int64_t>(whole);
    return {cycle, t - whole * tick};
}

EdgeStream EdgeStream::only(Polarity p) const
{
    EdgeStream out{signal, tick, {}};
    for (const auto& e : edges)
        if (e.polarity == p) out.edges.push_back(e);
    return out;
}

EdgeStream EdgeStream::after(double t_start) const
{
    EdgeStream out{signal, tick, {}};
    for (const auto& e : edges)
        if (e.time.seconds(tick) >= t_start) out.edges.push_back(e);
    return out;
}

EdgeStream make_stream(Signal s, std::span<const double> times, double tick)
{
    EdgeStream out{s, tick, {}};
    out.edges.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
        out.edges.push_back({static_cast<std::int64_t>(i), Polarity::Rising, Timestamp::from_seconds(times[i], tick)});
    return out;
}

}  // namespace fsynth
