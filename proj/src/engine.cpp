#include "fsynth/engine.hpp"

#include <array>
#include <cmath>
#include <deque>
#include <sstream>

#include "fsynth/analysis.hpp"

namespace fsynth {

const EdgeStream& SimTrace::stream(Signal s) const
{
    auto it = edges.find(s);
    if (it == edges.end()) throw std::out_of_range(std::string("signal ") + std::string(to_string(s)) + " not recorded");
    return it->second;
}

namespace {

constexpr std::int64_t kRailPinnedLimit = 10000;

class Engine
{
  public:
    Engine(const PllConfig& cfg, bool closed_loop, double duration, std::span<EdgeObserver* const> observers)
        : cfg_(cfg),
          closed_loop_(closed_loop),
          duration_(duration),
          observers_(observers.begin(), observers.end()),
          ratio_(cfg.np_plus_s()),
          tick_(1.0 / cfg.f_vco_target()),
          vco_jitter_(cfg.sim.seed, "vco.jitter"),
          ref_jitter_(cfg.sim.seed, "ref.jitter"),
          supply_(cfg.noise, cfg.f_vco_target(), cfg.sim.seed),
          outdiv_a_(cfg.outdiv_a),
          outdiv_b_(cfg.outdiv_b)
    {
        const double f_target = cfg.f_vco_target();
        band_ = cfg.forced_band ? *cfg.forced_band : band_search(f_target, cfg.vco, cfg.vdd_v);

        double v0 = cfg.sim.vctrl_init_v.value_or(cfg.vco.v_mid_v);
        if (!closed_loop_) v0 = lock_vctrl(band_, f_target, cfg.vco);
        filter_ = {v0, v0};

        if (cfg.noise.vco_pn) sigma_vco_ = sigma_from_pn(cfg.noise.vco_pn->l_dbc_hz, cfg.noise.vco_pn->offset_hz, f_target);

        for (const auto& r : cfg.sim.record_edges) {
            auto& slot = record_[static_cast<std::size_t>(r.signal)];
            slot.every = r.every;
            trace_.edges[r.signal] = EdgeStream{r.signal, tick_, {}};
            slot.stream = &trace_.edges[r.signal];
        }
        trace_.tick_s = tick_;
        trace_.duration_s = duration_;
        trace_.summary.band = band_;
        vco_.band = band_;

        fb_count_ = ratio_ - 1;  // first QUAD rising edge fires DIV
        next_vco_ = {0, 0.0};
        next_ref_ = {0, ref_jitter_sample() + ref_step(0)};
        next_sample_ = {0, 0.0};
    }

    SimTrace run()
    {
        const Timestamp end = Timestamp::from_seconds(duration_, tick_);
        for (;;) {
            Kind kind = Kind::Vco;
            Timestamp when = next_vco_;
            // ties: reset, then REF, then VCO, then sampling
            auto take_on_tie = [&](Kind k, const Timestamp& t) {
                if (!before(when, t, tick_)) {
                    kind = k;
                    when = t;
                }
            };
            if (closed_loop_) take_on_tie(Kind::Ref, next_ref_);
            if (pfd_.pending_reset_at) take_on_tie(Kind::Reset, *pfd_.pending_reset_at);
            if (before(next_sample_, when, tick_)) {
                kind = Kind::Sample;
                when = next_sample_;
            }
            if (before(end, when, tick_)) break;

            switch (kind) {
            case Kind::Reset: on_reset(when); break;
            case Kind::Ref: on_ref(when); break;
            case Kind::Vco: on_vco(when); break;
            case Kind::Sample: on_sample(when); break;
            }
        }
        advance_to(end);
        finish();
        return std::move(trace_);
    }

  private:
    enum class Kind { Reset, Ref, Vco, Sample };

    struct RecordSlot {
        std::int64_t every = 0;  // 0: not recorded
        std::int64_t count = 0;
        EdgeStream* stream = nullptr;
    };

    double ref_step(std::int64_t k) const
    {
        const double t = static_cast<double>(k) / cfg_.f_ref_hz;
        return cfg_.sim.ref_step_s != 0.0 && t >= cfg_.sim.ref_step_at_s ? cfg_.sim.ref_step_s : 0.0;
    }

    double ref_jitter_sample() { return cfg_.noise.ref_rj_s > 0 ? cfg_.noise.ref_rj_s * ref_jitter_.gaussian() : 0.0; }

    void emit(Signal s, Polarity p, const Timestamp& t)
    {
        auto& slot = record_[static_cast<std::size_t>(s)];
        const std::int64_t index = slot.count++;
        if (s == Signal::Lock && p == Polarity::Rising && !first_lock_time_) first_lock_time_ = t.seconds(tick_);
        if (slot.every > 0 && index % slot.every == 0) slot.stream->edges.push_back({index, p, t});
        if (!observers_.empty()) {
            const EdgeEvent e{s, p, t};
            for (auto* o : observers_) o->on_edge(e, tick_);
        }
    }

    void emit_all(const std::vector<EdgeEvent>& events)
    {
        for (const auto& e : events) emit(e.signal, e.polarity, e.time);
    }

    void advance_to(const Timestamp& t)
    {
        const double dt = seconds_between(t, now_, tick_);
        if (dt <= 0.0) return;
        if (closed_loop_) {
            filter_ = filter_advance(filter_, i_cp_, dt, cfg_.filter);
            if (clamp_to_rails(filter_, cfg_.vdd_v)) ++trace_.summary.clamp_events;

            const bool active = pfd_.up || pfd_.dn;
            const auto step = lockdet_advance(lockdet_, active, dt, cfg_.lockdet);
            if (step.toggled_after)
                emit(Signal::Lock, step.state.locked ? Polarity::Rising : Polarity::Falling,
                     advance(now_, *step.toggled_after));
            lockdet_ = step.state;
        }
        now_ = t;
    }

    void apply_pfd(const PfdOutput& out)
    {
        pfd_ = out.state;
        emit_all(out.emitted);
        i_cp_ = cp_current(pfd_.up, pfd_.dn, cfg_.cp);
    }

    void on_reset(const Timestamp& t)
    {
        advance_to(t);
        apply_pfd(pfd_reset_expiry(pfd_));
    }

    void on_ref(const Timestamp& t)
    {
        advance_to(t);
        emit(Signal::Ref, Polarity::Rising, t);
        apply_pfd(pfd_step(pfd_, {Signal::Ref, Polarity::Rising, t}, cfg_.pfd));

        const bool at_rail = filter_.v_ctrl <= 0.0 || filter_.v_ctrl >= cfg_.vdd_v;
        pinned_cycles_ = at_rail ? pinned_cycles_ + 1 : 0;
        if (pinned_cycles_ > kRailPinnedLimit) {
            std::ostringstream msg;
            msg << "loop cannot lock in selected band " << band_ << ": v_ctrl pinned at " << filter_.v_ctrl
                << " V for more than " << kRailPinnedLimit << " reference cycles";
            throw SimulationError(msg.str());
        }

        ++ref_count_;
        next_ref_ = {4 * ratio_ * ref_count_, ref_jitter_sample() + ref_step(ref_count_)};
    }

    void on_output_edge(Signal s, OutputDivider& div, Polarity in, const Timestamp& t)
    {
        if (auto p = div.clock(in)) {
            const Timestamp at = *p == Polarity::Falling ? advance(t, cfg_.noise.buffer_dcd_s) : t;
            emit(s, *p, at);
        }
    }

    void on_vco(const Timestamp& t)
    {
        advance_to(t);
        emit(Signal::Vco, Polarity::Rising, t);

        quad_ = !quad_;
        const Polarity qp = quad_ ? Polarity::Rising : Polarity::Falling;
        emit(Signal::Quad, qp, t);
        on_output_edge(Signal::OutA, outdiv_a_, qp, t);
        on_output_edge(Signal::OutB, outdiv_b_, qp, t);

        if (quad_ && ++fb_count_ == ratio_) {
            fb_count_ = 0;
            emit(Signal::Div, Polarity::Rising, t);
            clk_ = !clk_;
            emit(Signal::Clk, clk_ ? Polarity::Rising : Polarity::Falling, t);
            if (clk_) on_clk_rising(t);
        }

        const double t_s = t.seconds(tick_);
        supply_dev_ = supply_.active() ? supply_(t_s) : 0.0;
        const double jitter = sigma_vco_ > 0 ? sigma_vco_ * vco_jitter_.gaussian() : 0.0;
        const auto next = vco_next_edge(vco_, filter_.v_ctrl, supply_dev_, cfg_.vco, jitter, tick_);
        vco_ = next.state;
        next_vco_ = next.edge.time;
    }

    void on_clk_rising(const Timestamp& t)
    {
        if (closed_loop_) apply_pfd(pfd_step(pfd_, {Signal::Clk, Polarity::Rising, t}, cfg_.pfd));
        if (!clk_history_.empty()) {
            const double period = seconds_between(t, clk_history_.back(), tick_);
            trace_.clk_freq_error.push_back({t.seconds(tick_), (1.0 / cfg_.f_ref_hz) / period - 1.0});
        }
        clk_history_.push_back(t);
        if (clk_history_.size() > 101) clk_history_.pop_front();
    }

    void on_sample(const Timestamp& t)
    {
        advance_to(t);
        trace_.waveforms.push_back({t.seconds(tick_), filter_.v_ctrl, lockdet_.v_x, band_, supply_dev_});
        ++sample_count_;
        next_sample_ = Timestamp::from_seconds(static_cast<double>(sample_count_) * cfg_.sim.sample_interval_s, tick_);
    }

    void finish()
    {
        auto& s = trace_.summary;
        s.locked_at_end = lockdet_.locked;
        s.vco_cycles = vco_.cycles;

        if (clk_history_.size() >= 2) {
            const double span = seconds_between(clk_history_.back(), clk_history_.front(), tick_);
            const double f_clk = static_cast<double>(clk_history_.size() - 1) / span;
            s.final_freq_error = f_clk / cfg_.f_ref_hz - 1.0;
        }

        const auto& w = trace_.waveforms;
        if (w.empty()) {
            s.mean_vctrl_v = filter_.v_ctrl;
        } else {
            const std::size_t from = w.size() - std::max<std::size_t>(1, w.size() / 4);
            double sum = 0.0;
            for (std::size_t i = from; i < w.size(); ++i) sum += w[i].v_ctrl_v;
            s.mean_vctrl_v = sum / static_cast<double>(w.size() - from);
        }

        if (closed_loop_ && (s.locked_at_end || first_lock_time_)) {
            try {
                s.lock_time_s = lock_time(trace_);
            } catch (const AnalysisError&) {
                s.lock_time_s = first_lock_time_;
            }
        }
    }

    const PllConfig& cfg_;
    bool closed_loop_;
    double duration_;
    std::vector<EdgeObserver*> observers_;
    std::int64_t ratio_;
    double tick_;
    int band_ = 0;
    double sigma_vco_ = 0.0;

    RandomStream vco_jitter_;
    RandomStream ref_jitter_;
    SupplyWaveform supply_;
    double supply_dev_ = 0.0;

    Timestamp now_{0, 0.0};
    PfdState pfd_;
    double i_cp_ = 0.0;
    FilterState filter_;
    VcoState vco_;
    LockDetectorState lockdet_;
    bool quad_ = false;
    bool clk_ = false;
    std::int64_t fb_count_ = 0;
    OutputDivider outdiv_a_;
    OutputDivider outdiv_b_;

    Timestamp next_vco_;
    Timestamp next_ref_;
    Timestamp next_sample_;
    std::int64_t ref_count_ = 0;
    std::int64_t sample_count_ = 0;
    std::int64_t pinned_cycles_ = 0;
    std::deque<Timestamp> clk_history_;
    std::optional<double> first_lock_time_;

    std::array<RecordSlot, std::size(kAllSignals)> record_{};
    SimTrace trace_;
};

}  // namespace

SimTrace simulate(const PllConfig& cfg, std::span<EdgeObserver* const> observers)
{
    if (auto v = validate_config(cfg); !v.empty())
        throw ConfigError({v.front().field + ": " + v.front().message});
    return Engine(cfg, true, cfg.sim.duration_s, observers).run();
}

SimTrace simulate_open_vco(const PllConfig& cfg, double duration_s, std::span<EdgeObserver* const> observers)
{
    return Engine(cfg, false, duration_s, observers).run();
}

void RunningTie::on_edge(const EdgeEvent& e, double tick)
{
    if (e.signal != signal_ || e.polarity != Polarity::Rising) return;
    if (e.time.seconds(tick) < t_start_) return;
    if (!origin_) {
        origin_ = e.time;
        n_ = 1;
        return;
    }
    const double t = seconds_between(e.time, *origin_, tick);
    if (n_ == 1) guess_period_ = t;
    const double k = static_cast<double>(n_);
    const double r = t - k * guess_period_;

    // Welford update over the samples after the origin (origin is (0, 0)).
    const double m = static_cast<double>(n_ + 1);
    const double dk = k - mean_k_;
    const double dr = r - mean_r_;
    mean_k_ += dk / m;
    mean_r_ += dr / m;
    c_kk_ += dk * (k - mean_k_);
    c_kr_ += dk * (r - mean_r_);
    c_rr_ += dr * (r - mean_r_);
    ++n_;
}

double RunningTie::period() const { return c_kk_ > 0 ? guess_period_ + c_kr_ / c_kk_ : guess_period_; }

double RunningTie::rms() const
{
    if (n_ < 3 || c_kk_ <= 0) return 0.0;
    const double resid = c_rr_ - c_kr_ * c_kr_ / c_kk_;
    return std::sqrt(std::max(0.0, resid) / static_cast<double>(n_));
}

}  // namespace fsynth
