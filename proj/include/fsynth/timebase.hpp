#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fsynth {

enum class Signal : std::uint8_t { Ref, Div, Clk, Vco, Quad, OutA, OutB, Up, Dn, Lock };

inline constexpr Signal kAllSignals[] = {Signal::Ref, Signal::Div,  Signal::Clk,  Signal::Vco, Signal::Quad,
                                         Signal::OutA, Signal::OutB, Signal::Up, Signal::Dn,  Signal::Lock};

enum class Polarity : std::uint8_t { Rising, Falling };

std::string_view to_string(Signal s);
std::optional<Signal> parse_signal(std::string_view name);

/// A point in simulated time split as `cycle * tick + residual`.
///
/// The tick is the run's nominal VCO period. Keeping the integer part apart
/// lets femtosecond-scale residuals survive runs of 10^8 cycles and more.
struct Timestamp {
    std::int64_t cycle = 0;
    double residual = 0.0;

    double seconds(double tick) const { return static_cast<double>(cycle) * tick + residual; }

    static Timestamp from_seconds(double t, double tick);
};

/// Signed difference a - b in seconds.
inline double seconds_between(const Timestamp& a, const Timestamp& b, double tick)
{
    return static_cast<double>(a.cycle - b.cycle) * tick + (a.residual - b.residual);
}

inline Timestamp advance(Timestamp t, double dt) { return {t.cycle, t.residual + dt}; }

inline bool before(const Timestamp& a, const Timestamp& b, double tick) { return seconds_between(a, b, tick) < 0.0; }

struct EdgeEvent {
    Signal signal = Signal::Ref;
    Polarity polarity = Polarity::Rising;
    Timestamp time;
};

/// One recorded transition. `index` counts every transition of the signal
/// (both polarities where the signal has them) from the start of the run.
struct EdgeSample {
    std::int64_t index = 0;
    Polarity polarity = Polarity::Rising;
    Timestamp time;
};

struct EdgeStream {
    Signal signal = Signal::Ref;
    double tick = 0.0;
    std::vector<EdgeSample> edges;

    std::size_t size() const { return edges.size(); }
    bool empty() const { return edges.empty(); }
    double seconds(std::size_t i) const { return edges[i].time.seconds(tick); }

    /// Copy holding only the transitions of one polarity.
    EdgeStream only(Polarity p) const;
    /// Copy holding edges with time >= t_start seconds.
    EdgeStream after(double t_start) const;
};

/// Builds a stream from plain edge times (index = position).
EdgeStream make_stream(Signal s, std::span<const double> times, double tick);

}  // namespace fsynth
