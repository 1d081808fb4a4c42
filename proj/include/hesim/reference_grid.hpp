#pragma once

// Grid-level oracles: post-switch states by plain Newton at alpha = 1 and
// full-dynamic event runs by a conventional integrator.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hesim/reference.hpp"
#include "hesim/switching.hpp"
#include "hesim/trajectory.hpp"

namespace hesim {

/// Post-switch state solved by Newton on the final network, starting from the
/// pre-event voltages. Embedding terms that vanish at alpha = 1 are dropped;
/// an energized dead area is closed before the solve.
inline SimState switch_newton(const GridCase& c, const SwitchPlan& plan, const NewtonOptions& opt = {}) {
  SwitchPlan p = plan;
  finish_switch(c, p);
  if (!p.needs_solve && p.close_branch < 0) return p.post;
  Embedding emb = p.emb;
  emb.shunts.clear();
  emb.stamps.clear();
  const SimState& post = p.post;
  const GridDae m(c, post, SolveKind::Alpha, emb, 1.0);
  std::vector<double> x, y;
  m.pack(post, x, y);
  solve_algebraic(m, x, y, 0.0, opt);
  SimState out = post;
  m.unpack(nullptr, y.data(), out);
  return out;
}

/// Max-norm difference over bus voltages and device states.
inline double max_state_difference(const SimState& a, const SimState& b) {
  double d = 0.0;
  auto take = [&](double u, double w) { d = std::max(d, std::abs(u - w)); };
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    take(a.v[i].real(), b.v[i].real());
    take(a.v[i].imag(), b.v[i].imag());
  }
  for (std::size_t g = 0; g < a.gens.size(); ++g) {
    const auto &p = a.gens[g], &q = b.gens[g];
    for (auto [u, w] : {std::pair{p.delta, q.delta}, {p.omega, q.omega}, {p.eq, q.eq}, {p.ed, q.ed}, {p.vm, q.vm},
                        {p.g1, q.g1}, {p.g2, q.g2}})
      take(u, w);
  }
  for (std::size_t l = 0; l < a.loads.size(); ++l) {
    const auto &p = a.loads[l], &q = b.loads[l];
    for (auto [u, w] : {std::pair{p.slip, q.slip}, {p.er, q.er}, {p.em, q.em}}) take(u, w);
  }
  return d;
}

struct ReferenceRun {
  std::vector<double> t;
  std::vector<SimState> states;  // post-event state at event instants
  std::vector<EventRecord> events;
};

/// Full-dynamic run of a script with the reference integrator between timed
/// events and Newton re-solves at switches. Samples at multiples of opt.h
/// from each event. Conditional events must be MARKs; their times come from
/// linear interpolation of the condition between samples.
inline ReferenceRun simulate_reference(const GridCase& c, double t_end, const RefOptions& opt = {}) {
  for (const auto& ev : c.script) {
    if (ev.condition && ev.kind != EventKind::Mark)
      throw Error(ErrorKind::ValidationError, "reference runs take conditional MARK events only");
    if (ev.kind == EventKind::Stop && ev.time) t_end = std::min(t_end, *ev.time);
  }
  SimState st = init_equilibrium(c);
  {
    const GridDae m(c, st, SolveKind::Time);
    std::vector<double> x, y;
    m.pack(st, x, y);
    solve_algebraic(m, x, y, 0.0);
    m.unpack(x.data(), y.data(), st);
  }
  ReferenceRun run;
  run.t.push_back(st.t);
  run.states.push_back(st);
  std::vector<bool> done(c.script.size(), false);
  constexpr double kTimeTol = 1e-9;
  auto log = [&](double t, const SimEvent& ev) { run.events.push_back({t, to_string(ev.kind), ev.target, ev.label}); };
  for (bool initial = true;; initial = false) {
    if (!initial && st.t >= t_end - kTimeTol) break;  // events at t_end are not applied
    for (std::size_t i = 0; i < c.script.size(); ++i) {
      const auto& ev = c.script[i];
      if (done[i] || !ev.time || *ev.time > st.t + kTimeTol) continue;
      done[i] = true;
      if (ev.kind == EventKind::Stop) continue;
      if (is_switch(ev.kind)) {
        const double t = st.t;
        st = switch_newton(c, plan_switch(c, st, ev));
        st.t = t;
      } else if (ev.kind == EventKind::RampGen) {
        st.gens[c.gen_index(ev.target)].ramps.push_back({st.t, ev.values});
      } else if (ev.kind == EventKind::RampGenStop) {
        auto& gs = st.gens[c.gen_index(ev.target)];
        gs.pagc += ramp_sum(gs.ramps, st.t);
        gs.ramps.clear();
      } else if (ev.kind == EventKind::RampLoad) {
        st.loads[c.load_index(ev.target)].ramps.push_back({st.t, ev.values});
      } else if (ev.kind == EventKind::RampLoadStop) {
        auto& ls = st.loads[c.load_index(ev.target)];
        ls.scale += ramp_sum(ls.ramps, st.t);
        ls.ramps.clear();
      }
      log(st.t, ev);
    }
    for (std::size_t i = 0; i < c.script.size(); ++i)
      if (!done[i] && c.script[i].condition && condition_value(c, st, *c.script[i].condition) >= 0.0) {
        done[i] = true;
        log(st.t, c.script[i]);
      }
    run.states.back() = st;
    if (st.t >= t_end - kTimeTol) break;
    double horizon = t_end;
    for (std::size_t i = 0; i < c.script.size(); ++i)
      if (!done[i] && c.script[i].time) horizon = std::min(horizon, *c.script[i].time);
    const SimState start = st;
    const GridDae m(c, start, SolveKind::Time);
    std::vector<double> x, y;
    m.pack(start, x, y);
    const auto tr = integrate_reference(m, x, y, horizon - start.t, opt);
    const std::size_t first = run.t.size() - 1;
    for (std::size_t k = 1; k < tr.t.size(); ++k) {
      SimState s = start;
      m.unpack(tr.x[k].data(), tr.y[k].data(), s);
      s.t = k + 1 == tr.t.size() ? horizon : start.t + tr.t[k];
      run.t.push_back(s.t);
      run.states.push_back(s);
    }
    for (std::size_t i = 0; i < c.script.size(); ++i) {
      if (done[i] || !c.script[i].condition) continue;
      std::vector<double> h;
      for (std::size_t k = first; k < run.t.size(); ++k) h.push_back(condition_value(c, run.states[k], *c.script[i].condition));
      const std::vector<double> ts(run.t.begin() + static_cast<std::ptrdiff_t>(first), run.t.end());
      if (auto tc = first_crossing(ts, h, 0.0, false)) {
        done[i] = true;
        log(*tc, c.script[i]);
      }
    }
    std::stable_sort(run.events.begin(), run.events.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    st = run.states.back();
  }
  return run;
}

}  // namespace hesim
