#pragma once

// Instantaneous system events. Each switch is planned as a post-event state
// (topology and device set changed, differential states frozen, algebraic
// anchor at the pre-event values) plus an alpha embedding whose alpha = 0
// problem is the pre-event network and whose alpha = 1 problem is the
// post-event network. The plan can be solved by the HE continuation or, as an
// oracle, by Newton directly at alpha = 1.

#include <cmath>
#include <complex>
#include <set>
#include <vector>

#include "hesim/dae.hpp"
#include "hesim/he_engine.hpp"
#include "hesim/powerflow.hpp"
#include "hesim/state.hpp"

namespace hesim {

/// Current drawn by a load (static part plus motor) at the state's voltage.
inline cplx load_current(const GridCase& c, const SimState& st, int l) {
  const auto& ls = st.loads[l];
  if (!ls.online) return 0.0;
  const auto& ld = c.loads[l];
  const cplx v = st.v[c.bus_index(ld.bus)];
  const double m = std::abs(v);
  const double lam = ls.scale + ramp_sum(ls.ramps, st.t);
  cplx i = 0.0;
  if (m > 0) i = lam * cplx(ls.p, -ls.q) * v * (ld.fz + ld.fi / m + ld.fp / (m * m));
  if (ls.motor_on) {
    const MotorParams mp = ld.motor_sys();
    i += (v - cplx(ls.er, ls.em)) / cplx(mp.rs, mp.x1());
  }
  return i;
}

/// Current entering branch k at its from (first) or to end.
inline cplx branch_end_current(const GridCase& c, const SimState& st, int k, bool from_end) {
  const auto& br = st.branches[k];
  const cplx vf = st.v[c.bus_index(br.from)], vt = st.v[c.bus_index(br.to)];
  const cplx ys = br.series_admittance(), ysh(0.0, 0.5 * br.b);
  if (from_end) return (ys + ysh) / (br.tap * br.tap) * vf - ys / br.tap * vt;
  return (ys + ysh) * vt - ys / br.tap * vf;
}

/// Entries (i, j, y) of a branch's admittance stamp.
inline std::vector<StampTerm> branch_stamp(const GridCase& c, const Branch& br, Scale sc, double sign = 1.0) {
  const int f = c.bus_index(br.from), t = c.bus_index(br.to);
  const cplx ys = br.series_admittance(), ysh(0.0, 0.5 * br.b);
  const double a = br.tap;
  return {{f, f, sign * (ys + ysh) / (a * a), sc},
          {t, t, sign * (ys + ysh), sc},
          {f, t, -sign * ys / a, sc},
          {t, f, -sign * ys / a, sc}};
}

/// Nominal motor operating point (1 pu terminal voltage, rated power).
inline MotorOperatingPoint motor_nominal(const GridCase& c, int l) {
  const auto& ld = c.loads[l];
  return motor_operating_point(ld.motor_sys(), cplx(1.0, 0.0), ld.p * ld.motor.share, c.fs);
}

struct SwitchPlan {
  SimState post;
  Embedding emb;
  bool needs_solve = true;
  // Energizing a dead area: branch to close and area buses to recover after
  // the live-side solve.
  int close_branch = -1;
  int live_bus = -1;
  std::vector<int> dead_area;
};

namespace detail {

inline Embedding empty_embedding(const GridCase& c) {
  Embedding e;
  e.gen_scale.assign(c.gens.size(), Scale::One);
  e.load_scale.assign(c.loads.size(), Scale::One);
  return e;
}

inline void add_cut_shunt(SwitchPlan& p, const SimState& pre, int bus, cplx current_out) {
  const cplx v = pre.v[bus];
  if (std::abs(v) < 1e-12) throw Error(ErrorKind::ZeroBoundaryVoltage, "boundary voltage is zero");
  p.emb.shunts.push_back({bus, current_out / v, Scale::OneMinusAlpha});
}

/// Buses reached from `start` through online branches in `st` without
/// passing energized buses.
inline std::vector<int> dead_component(const GridCase& c, const SimState& st, int start) {
  std::vector<int> out{start};
  std::set<int> seen{start};
  for (std::size_t h = 0; h < out.size(); ++h) {
    for (const auto& br : st.branches) {
      if (!br.online) continue;
      const int f = c.bus_index(br.from), t = c.bus_index(br.to);
      int other = -1;
      if (f == out[h]) other = t;
      if (t == out[h]) other = f;
      if (other >= 0 && !st.energized(other) && seen.insert(other).second) out.push_back(other);
    }
  }
  return out;
}

}  // namespace detail

/// Builds the post-event state and embedding for a switching event at pre.t.
inline SwitchPlan plan_switch(const GridCase& c, const SimState& pre, const SimEvent& ev) {
  SwitchPlan p;
  p.post = pre;
  p.emb = detail::empty_embedding(c);
  SimState& post = p.post;
  switch (ev.kind) {
    case EventKind::AddBranch: {
      const int k = c.branch_index(ev.target);
      if (post.branches[k].online) {
        p.needs_solve = false;
        break;
      }
      const auto& br = post.branches[k];
      const int f = c.bus_index(br.from), t = c.bus_index(br.to);
      const bool ef = pre.energized(f), et = pre.energized(t);
      if (ef && et) {
        post.branches[k].online = true;
        for (auto s : branch_stamp(c, br, Scale::OneMinusAlpha, -1.0)) p.emb.stamps.push_back(s);
        refresh_topology(c, post);
      } else if (!ef && !et) {
        post.branches[k].online = true;
        p.needs_solve = false;
      } else {
        // Energize the dead area through its Kron-reduced admittance seen
        // from the live bus.
        const int live = ef ? f : t;
        const int dead = ef ? t : f;
        SimState closed = pre;
        closed.branches[k].online = true;
        auto area = detail::dead_component(c, closed, dead);
        const auto y = build_admittance(c, closed.branches);
        const int nd = static_cast<int>(area.size());
        Eigen::MatrixXcd ydd(nd, nd);
        Eigen::VectorXcd ydl(nd);
        for (int i = 0; i < nd; ++i) {
          for (int j = 0; j < nd; ++j) ydd(i, j) = y(area[i], area[j]);
          ydd(i, i) += pre.bus_fault[area[i]];
          ydl[i] = y(area[i], live);
        }
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(ydd);
        if (!lu.isInvertible()) throw Error(ErrorKind::SingularJacobian, "energized area has a singular admittance");
        const cplx own = ef ? (br.series_admittance() + cplx(0, 0.5 * br.b)) / (br.tap * br.tap)
                            : br.series_admittance() + cplx(0, 0.5 * br.b);
        const cplx yeq = own - (ydl.transpose() * lu.solve(ydl))(0, 0);
        p.emb.shunts.push_back({live, yeq, Scale::Alpha});
        p.close_branch = k;
        p.live_bus = live;
        p.dead_area = area;
      }
      break;
    }
    case EventKind::CutBranch: {
      const int k = c.branch_index(ev.target);
      if (!post.branches[k].online) {
        p.needs_solve = false;
        break;
      }
      const int f = c.bus_index(post.branches[k].from), t = c.bus_index(post.branches[k].to);
      const cplx i_f = branch_end_current(c, pre, k, true), i_t = branch_end_current(c, pre, k, false);
      post.branches[k].online = false;
      refresh_topology(c, post);
      if (post.energized(f) && pre.energized(f)) detail::add_cut_shunt(p, pre, f, i_f);
      if (post.energized(t) && pre.energized(t)) detail::add_cut_shunt(p, pre, t, i_t);
      break;
    }
    case EventKind::AddLoad: {
      const int l = c.load_index(ev.target);
      const int b = c.bus_index(c.loads[l].bus);
      if (post.loads[l].online) {
        p.needs_solve = false;
        break;
      }
      if (!pre.energized(b)) throw Error(ErrorKind::ValidationError, "load added to a de-energized bus");
      const auto& ld = c.loads[l];
      auto& ls = post.loads[l];
      ls = LoadState{};
      ls.online = true;
      ls.scale = ld.scale;
      ls.p = ld.p * (1.0 - ld.motor.share);
      ls.q = ld.q;
      if (ld.has_motor()) {
        const auto nom = motor_nominal(c, l);
        ls.q = ld.q - std::imag(std::conj(nom.current));
        ls.motor_on = true;
        ls.torque_coeff = nom.torque_coeff;
        if (post.mode == Mode::Dynamic) {
          ls.slip = 1.0;
        } else {
          const auto ss = motor_steady_state(ld.motor_sys(), pre.v[b], nom.torque_coeff);
          ls.slip = ss.slip;
          ls.er = ss.e1.real();
          ls.em = ss.e1.imag();
        }
      }
      p.emb.load_scale[l] = Scale::Alpha;
      break;
    }
    case EventKind::CutLoad: {
      const int l = c.load_index(ev.target);
      if (!post.loads[l].online) {
        p.needs_solve = false;
        break;
      }
      const int b = c.bus_index(c.loads[l].bus);
      detail::add_cut_shunt(p, pre, b, load_current(c, pre, l));
      post.loads[l].online = false;
      post.loads[l].motor_on = false;
      break;
    }
    case EventKind::AddGen: {
      const int g = c.gen_index(ev.target);
      const int b = c.bus_index(c.gens[g].bus);
      if (post.gens[g].online) {
        p.needs_solve = false;
        break;
      }
      if (!pre.energized(b)) throw Error(ErrorKind::ValidationError, "generator synchronized to a de-energized bus");
      // Synchronized at its open-circuit match: zero exchange at the instant.
      auto& gs = post.gens[g];
      const cplx v = pre.v[b];
      gs = GenState{};
      gs.online = true;
      gs.delta = std::arg(v);
      gs.eq = std::abs(v);
      gs.vm = gs.eq;
      gs.vref = std::abs(v) + gs.vm / c.gens[g].avr.ka;
      gs.vset = std::abs(v);
      const int isl = pre.island[b];
      double hw = 0.0, h = 0.0;
      for (std::size_t k = 0; k < c.gens.size(); ++k)
        if (pre.gens[k].online && pre.island[c.bus_index(c.gens[k].bus)] == isl) {
          hw += c.gens[k].m.h * pre.gens[k].omega;
          h += c.gens[k].m.h;
        }
      gs.omega = pre.mode == Mode::Dynamic && h > 0 ? hw / h : 0.0;
      gs.g1 = gs.g2 = 0.0;
      gs.pagc = gs.omega / c.gens[g].gov.r;
      refresh_topology(c, post);
      p.emb.gen_scale[g] = Scale::Alpha;
      break;
    }
    case EventKind::CutGen: {
      const int g = c.gen_index(ev.target);
      if (!post.gens[g].online) {
        p.needs_solve = false;
        break;
      }
      const int b = c.bus_index(c.gens[g].bus);
      const cplx ig = gen_current(c, pre, g);
      post.gens[g].online = false;
      refresh_topology(c, post);
      if (post.energized(b)) detail::add_cut_shunt(p, pre, b, -ig);
      break;
    }
    case EventKind::Fault:
    case EventKind::ClearFault: {
      const int b = c.bus_index(ev.target);
      const cplx old = post.bus_fault[b];
      post.bus_fault[b] = ev.kind == EventKind::Fault ? old + cplx(ev.values[0], ev.values[1]) : cplx(0.0);
      if (!pre.energized(b) || post.bus_fault[b] == old) {
        p.needs_solve = false;
        break;
      }
      p.emb.shunts.push_back({b, old - post.bus_fault[b], Scale::OneMinusAlpha});
      break;
    }
    case EventKind::SetBranch: {
      const int k = c.branch_index(ev.target);
      const Branch old = post.branches[k];
      post.branches[k].r = ev.values[0];
      post.branches[k].x = ev.values[1];
      if (!old.online) {
        p.needs_solve = false;
        break;
      }
      // Y_post + (1 - alpha) (Y_old - Y_new).
      for (auto s : branch_stamp(c, old, Scale::OneMinusAlpha, 1.0)) p.emb.stamps.push_back(s);
      for (auto s : branch_stamp(c, post.branches[k], Scale::OneMinusAlpha, -1.0)) p.emb.stamps.push_back(s);
      break;
    }
    case EventKind::SetLoad: {
      const int l = c.load_index(ev.target);
      auto& ls = post.loads[l];
      p.emb.blends.push_back({l, ls.p, ls.q});
      ls.p = ev.values[0];
      ls.q = ev.values[1];
      if (!ls.online) {
        p.needs_solve = false;
        p.emb.blends.clear();
      }
      break;
    }
    default:
      p.needs_solve = false;
      break;
  }
  if (p.needs_solve) {
    bool any = false;
    for (int b = 0; b < static_cast<int>(c.buses.size()); ++b) any = any || post.energized(b);
    p.needs_solve = any;
  }
  return p;
}

/// Closes the energizing branch and fills in the dead-area voltages from the
/// solved live-bus voltage.
inline void finish_switch(const GridCase& c, SwitchPlan& p) {
  SimState& st = p.post;
  if (p.close_branch < 0) return;
  st.branches[p.close_branch].online = true;
  const auto y = build_admittance(c, st.branches);
  const int nd = static_cast<int>(p.dead_area.size());
  Eigen::MatrixXcd ydd(nd, nd);
  Eigen::VectorXcd ydl(nd);
  for (int i = 0; i < nd; ++i) {
    for (int j = 0; j < nd; ++j) ydd(i, j) = y(p.dead_area[i], p.dead_area[j]);
    ydd(i, i) += st.bus_fault[p.dead_area[i]];
    ydl[i] = y(p.dead_area[i], p.live_bus);
  }
  const Eigen::VectorXcd vd = -ydd.fullPivLu().solve(ydl * st.v[p.live_bus]);
  refresh_topology(c, st);
  for (int i = 0; i < nd; ++i) st.v[p.dead_area[i]] = vd[i];
  refresh_topology(c, st);
}

/// Post-switch state by alpha continuation.
inline SimState solve_switch_he(const GridCase& c, SwitchPlan p, const AlphaOptions& opt = {}) {
  if (p.needs_solve) {
    const SimState& post = p.post;
    auto make = [&](double a0) { return GridDae(c, post, SolveKind::Alpha, p.emb, a0); };
    const GridDae m0 = make(0.0);
    std::vector<double> x, y;
    m0.pack(post, x, y);
    const auto r = solve_alpha(make, y, opt);
    SimState out = post;
    m0.unpack(nullptr, r.y.data(), out);
    p.post = std::move(out);
  }
  finish_switch(c, p);
  return p.post;
}

/// One-shot event application: plan, solve, finish.
inline SimState apply_switch(const GridCase& c, const SimState& pre, const SimEvent& ev,
                             const AlphaOptions& opt = {}) {
  return solve_switch_he(c, plan_switch(c, pre, ev), opt);
}

}  // namespace hesim
