#pragma once

// Event-driven orchestration of analytic segments: timed and conditional
// events, dynamic <-> QSS switching, and failure handling.

#include <chrono>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hesim/switching.hpp"
#include "hesim/trajectory.hpp"

namespace hesim {

enum class RunMode { Hybrid, Dynamic, Qss };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::Hybrid: return "hybrid";
    case RunMode::Dynamic: return "dynamic";
    case RunMode::Qss: return "qss";
  }
  return "?";
}

inline RunMode run_mode_from_string(const std::string& s) {
  if (s == "hybrid") return RunMode::Hybrid;
  if (s == "dynamic") return RunMode::Dynamic;
  if (s == "qss") return RunMode::Qss;
  throw Error(ErrorKind::ValidationError, "unknown mode " + s);
}

struct RunConfig {
  RunMode mode = RunMode::Hybrid;
  int order = 15;
  double eps_t = 1e-3;
  double tol = 1e-6;
  double t_end = 100.0;  // overridden by a STOP event
  double dyn_t_max = 1.0;
  double qss_t_max = 30.0;
  double min_dwell = 1.0;
  AlphaOptions alpha;
};

struct RunFailure {
  ErrorKind kind = ErrorKind::SegmentFailure;
  double t = 0.0;
  std::string message;
};

struct RunResult {
  Trajectory traj;
  SimState final_state;
  std::optional<RunFailure> failure;
  double wall_time = 0.0;
  std::size_t system_events = 0;

  bool ok() const { return !failure; }
};

namespace detail {

inline void polish_anchor(const GridCase& c, SimState& st) {
  const GridDae m(c, st, SolveKind::Time);
  if (m.ny() == 0) return;
  std::vector<double> x, y;
  m.pack(st, x, y);
  newton_polish(m, x, y, 0.0);
  m.unpack(x.data(), y.data(), st);
}

inline void convert_to_qss(const GridCase& c, SimState& st) {
  for (int i = 0; i < st.n_islands; ++i) {
    double hw = 0.0, h = 0.0;
    for (std::size_t g = 0; g < c.gens.size(); ++g) {
      if (!st.gens[g].online || st.island[c.bus_index(c.gens[g].bus)] != i) continue;
      hw += c.gens[g].m.h * st.gens[g].omega;
      h += c.gens[g].m.h;
    }
    st.island_df[i] = st.island_has_slack[i] || h == 0.0 ? 0.0 : c.fs * hw / h;
    const int ref = st.island_ref_gen[i];
    if (ref >= 0) st.island_theta0[i] = std::arg(st.v[c.bus_index(c.gens[ref].bus)]);
  }
  for (std::size_t g = 0; g < c.gens.size(); ++g) {
    if (!st.gens[g].online) continue;
    const cplx v = st.v[c.bus_index(c.gens[g].bus)];
    st.gens[g].vset = std::abs(v);
    st.gens[g].qg = gen_power(c, st, static_cast<int>(g)).imag();
    st.gens[g].q_limit = 0;
  }
  st.mode = Mode::Qss;
  polish_anchor(c, st);
}

struct QLimitChange {
  int gen = 0;
  int limit = 0;  // +1 upper, -1 lower, 0 released to PV
};

/// PV <-> PQ transitions of QSS generators at their reactive limits, checked
/// between segments. A limited unit returns to PV once its voltage crosses
/// back over the setpoint. The network is re-solved when anything changes.
inline std::vector<QLimitChange> enforce_q_limits(const GridCase& c, SimState& st) {
  std::vector<QLimitChange> out;
  if (st.mode != Mode::Qss) return out;
  for (std::size_t g = 0; g < c.gens.size(); ++g) {
    auto& gs = st.gens[g];
    if (!gs.online) continue;
    const auto& gen = c.gens[g];
    const double vm = std::abs(st.v[c.bus_index(gen.bus)]);
    const int before = gs.q_limit;
    if (before == 0 && gs.qg > gen.qmax) gs.q_limit = 1;
    else if (before == 0 && gs.qg < gen.qmin) gs.q_limit = -1;
    else if ((before > 0 && vm > gs.vset) || (before < 0 && vm < gs.vset)) gs.q_limit = 0;
    if (gs.q_limit != before) out.push_back({static_cast<int>(g), gs.q_limit});
  }
  if (out.empty()) return out;
  const GridDae m(c, st, SolveKind::Time);
  std::vector<double> x, y;
  m.pack(st, x, y);
  newton_polish(m, x, y, 0.0, 1e-13, 30);
  m.unpack(x.data(), y.data(), st);
  return out;
}

}  // namespace detail

/// Converts between formulations at the current instant. dyn -> qss requires
/// a steady verdict; qss -> dyn back-initializes machines at their PV
/// operating point with the island speed deviation.
inline SimState mode_switch(const GridCase& c, const SimState& st, Mode to,
                            const SteadyStateVerdict* verdict = nullptr) {
  SimState out = st;
  if (to == st.mode) return out;
  if (to == Mode::Qss) {
    if (!verdict || !verdict->system_steady) throw Error(ErrorKind::NotSteady, "no steady verdict for dyn -> qss");
    detail::convert_to_qss(c, out);
    return out;
  }
  for (std::size_t g = 0; g < c.gens.size(); ++g) {
    if (!st.gens[g].online) continue;
    const int b = c.bus_index(c.gens[g].bus);
    const cplx s = gen_power(c, st, static_cast<int>(g));
    auto& gs = out.gens[g];
    const double pagc = gs.pagc;
    init_machine(c.gens[g], gs, st.v[b], s);
    gs.omega = st.island_df[st.island[b]] / c.fs;
    gs.pagc = pagc;
    gs.q_limit = 0;
    gs.g1 = gs.g2 = pagc + ramp_sum(gs.ramps, st.t) - gs.omega / c.gens[g].gov.r;
  }
  out.mode = Mode::Dynamic;
  detail::polish_anchor(c, out);
  return out;
}

namespace detail {

/// Segment from st with the retry ladder: configured order, one order
/// increase, then two halvings of the window.
inline Segment solve_segment(const GridCase& c, const SimState& st, const RunConfig& cfg, double cap) {
  Segment seg;
  seg.t0 = st.t;
  seg.mode = st.mode;
  seg.start = std::make_shared<const SimState>(st);
  const GridDae m(c, *seg.start, SolveKind::Time);
  std::vector<double> x, y;
  m.pack(st, x, y);
  if (m.nx() + m.ny() == 0) {
    seg.span = cap;
    return seg;
  }
  const int orders[] = {cfg.order, cfg.order + 5, cfg.order + 5, cfg.order + 5};
  const double caps[] = {cap, cap, cap / 2, cap / 4};
  std::string last;
  for (int a = 0; a < 4; ++a) {
    try {
      HeOptions ho;
      ho.order = orders[a];
      ho.tol = cfg.tol;
      ho.t_max = caps[a];
      seg.sol = solve_he(m, x, y, ho);
      seg.span = seg.sol.span;
      seg.order = orders[a];
      return seg;
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::NoValidRange:
        case ErrorKind::SingularJacobian:
        case ErrorKind::AnchorInconsistent:
        case ErrorKind::SingularPade:
        case ErrorKind::DenominatorZero: last = e.what(); break;
        default: throw;
      }
    }
  }
  throw Error(ErrorKind::SegmentFailure, "segment at t = " + std::to_string(st.t) + " failed: " + last);
}

}  // namespace detail

class Simulator {
 public:
  Simulator(const GridCase& c, RunConfig cfg) : c_(c), cfg_(std::move(cfg)) {
    t_end_ = cfg_.t_end;
    for (const auto& ev : c_.script)
      if (ev.kind == EventKind::Stop && ev.time) t_end_ = std::min(t_end_, *ev.time);
  }

  RunResult run() {
    const auto wall0 = std::chrono::steady_clock::now();
    RunResult res;
    res.traj.t_end = t_end_;
    try {
      st_ = init_equilibrium(c_, cfg_.alpha);
      detail::polish_anchor(c_, st_);
      if (cfg_.mode == RunMode::Qss) detail::convert_to_qss(c_, st_);
      loop(res);
    } catch (const Error& e) {
      res.failure = RunFailure{e.kind(), st_.t, e.what()};
    }
    res.final_state = st_;
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return res;
  }

 private:
  void log(RunResult& res, const std::string& kind, int target, const std::string& label) {
    res.traj.events.push_back({st_.t, kind, target, label});
  }

  void execute(RunResult& res, const SimEvent& ev) {
    if (is_switch(ev.kind)) {
      if (st_.mode == Mode::Qss && cfg_.mode == RunMode::Hybrid) {
        st_ = mode_switch(c_, st_, Mode::Dynamic);
        dwell_until_ = st_.t + cfg_.min_dwell;
        log(res, "MODE_DYN", 0, "");
      }
      std::vector<bool> before(c_.buses.size());
      for (std::size_t b = 0; b < before.size(); ++b) before[b] = st_.energized(static_cast<int>(b));
      st_ = apply_switch(c_, st_, ev, cfg_.alpha);
      log(res, to_string(ev.kind), ev.target, ev.label);
      for (std::size_t b = 0; b < before.size(); ++b)
        if (before[b] && !st_.energized(static_cast<int>(b))) log(res, "COLLAPSE", c_.buses[b].id, "");
    } else {
      switch (ev.kind) {
        case EventKind::RampGen: st_.gens[c_.gen_index(ev.target)].ramps.push_back({st_.t, ev.values}); break;
        case EventKind::RampGenStop: {
          auto& gs = st_.gens[c_.gen_index(ev.target)];
          gs.pagc += ramp_sum(gs.ramps, st_.t);
          gs.ramps.clear();
          break;
        }
        case EventKind::RampLoad: st_.loads[c_.load_index(ev.target)].ramps.push_back({st_.t, ev.values}); break;
        case EventKind::RampLoadStop: {
          auto& ls = st_.loads[c_.load_index(ev.target)];
          ls.scale += ramp_sum(ls.ramps, st_.t);
          ls.ramps.clear();
          break;
        }
        default: break;
      }
      log(res, to_string(ev.kind), ev.target, ev.label);
    }
    if (ev.kind != EventKind::Mark && ev.kind != EventKind::Stop) ++res.system_events;
  }

  std::optional<double> next_timed() const {
    std::optional<double> best;
    for (std::size_t i = 0; i < c_.script.size(); ++i) {
      const auto& ev = c_.script[i];
      if (done_[i] || !ev.time) continue;
      if (!best || *ev.time < *best) best = *ev.time;
    }
    return best;
  }

  void loop(RunResult& res) {
    done_.assign(c_.script.size(), false);
    constexpr double kTimeTol = 1e-9;
    for (bool first = true;; first = false) {
      if (!first && st_.t >= t_end_ - kTimeTol) break;  // events at t_end are not executed
      // Timed events due now in script order, then satisfied conditions.
      for (std::size_t i = 0; i < c_.script.size(); ++i) {
        const auto& ev = c_.script[i];
        if (done_[i] || !ev.time || *ev.time > st_.t + kTimeTol) continue;
        done_[i] = true;
        if (ev.kind == EventKind::Stop) continue;
        execute(res, ev);
      }
      for (std::size_t i = 0; i < c_.script.size(); ++i) {
        const auto& ev = c_.script[i];
        if (done_[i] || !ev.condition || condition_value(c_, st_, *ev.condition) < 0.0) continue;
        done_[i] = true;
        execute(res, ev);
      }
      for (const auto& q : detail::enforce_q_limits(c_, st_))
        log(res, q.limit == 0 ? "Q_RELEASE" : "Q_LIMIT", c_.gens[q.gen].id, q.limit > 0 ? "max" : q.limit < 0 ? "min" : "");
      if (st_.t >= t_end_ - kTimeTol) break;

      double horizon = t_end_;
      if (auto nt = next_timed()) horizon = std::min(horizon, *nt);
      const double cap = std::min(st_.mode == Mode::Dynamic ? cfg_.dyn_t_max : cfg_.qss_t_max, horizon - st_.t);
      if (st_.mode == Mode::Dynamic || st_.mode == Mode::Qss) detail::polish_anchor(c_, st_);
      Segment seg = detail::solve_segment(c_, st_, cfg_, cap);
      bool reached = seg.span >= cap * (1.0 - 1e-12);
      double step = std::min(seg.span, cap);
      for (std::size_t i = 0; i < c_.script.size(); ++i) {
        const auto& ev = c_.script[i];
        if (done_[i] || !ev.condition) continue;
        if (auto s = locate_conditional_event(c_, seg, *ev.condition, step)) {
          step = *s;
          reached = false;
        }
      }
      if (step < 1e-9) throw Error(ErrorKind::SegmentFailure, "segment length underflow");
      seg.span = step;
      res.traj.segments.push_back(seg);
      const double t_next = reached ? seg.t0 + cap : seg.t0 + step;
      st_ = segment_state(c_, seg, step);
      st_.t = (reached && cap == horizon - seg.t0) ? horizon : t_next;

      if (cfg_.mode == RunMode::Hybrid && seg.mode == Mode::Dynamic && st_.t >= dwell_until_ - kTimeTol) {
        auto vars = monitored_variables(c_, res.traj.segments.back());
        if (!vars.empty()) {
          auto verdict = steady_state_check(vars, step, cfg_.eps_t);
          if (verdict.system_steady) {
            st_ = mode_switch(c_, st_, Mode::Qss, &verdict);
            res.traj.verdicts.push_back({st_.t, std::move(verdict)});
            log(res, "MODE_QSS", 0, "");
          }
        }
      }
    }
  }

  const GridCase& c_;
  RunConfig cfg_;
  double t_end_ = 0.0;
  double dwell_until_ = 0.0;
  SimState st_;
  std::vector<bool> done_;
};

inline RunResult run_simulation(const GridCase& c, const RunConfig& cfg) { return Simulator(c, cfg).run(); }

}  // namespace hesim
