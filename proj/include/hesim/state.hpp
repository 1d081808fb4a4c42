#pragma once

// Mutable simulation state: topology status, device states and the per-island
// bookkeeping needed by both the dynamic and the QSS formulations.

#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include "hesim/grid.hpp"
#include "hesim/series.hpp"

namespace hesim {

enum class Mode { Dynamic, Qss };

inline const char* to_string(Mode m) { return m == Mode::Dynamic ? "dyn" : "qss"; }

/// Additive polynomial ramp, zero at its start: sum_k c[k] (t - t0)^(k+1).
struct Ramp {
  double t_start = 0.0;
  std::vector<double> coeffs;

  template <class T>
  T eval(const T& t) const {
    const T tau = t - t_start;
    T acc = tau * 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) acc = (acc + coeffs[k]) * tau;
    return acc;
  }
};

template <class T>
T ramp_sum(const std::vector<Ramp>& ramps, const T& t) {
  T acc = t * 0.0;
  for (const auto& r : ramps) acc = acc + r.eval(t);
  return acc;
}

struct GenState {
  bool online = false;
  double delta = 0.0, omega = 0.0, eq = 0.0, ed = 0.0, vm = 0.0, g1 = 0.0, g2 = 0.0, pagc = 0.0;
  double vref = 1.0;  // AVR reference
  double vset = 1.0;  // QSS terminal voltage setpoint
  double qg = 0.0;    // QSS reactive output
  int q_limit = 0;    // QSS reactive limit held: +1 upper, -1 lower, 0 none (PV)
  std::vector<Ramp> ramps;
};

struct LoadState {
  bool online = false;
  double p = 0.0, q = 0.0;  // static (ZIP) part, consumption at 1 pu
  double scale = 1.0;
  std::vector<Ramp> ramps;
  bool motor_on = false;
  double slip = 0.0, er = 0.0, em = 0.0;
  double torque_coeff = 0.0;
};

struct SimState {
  double t = 0.0;
  Mode mode = Mode::Dynamic;
  std::vector<Branch> branches;
  std::vector<cplx> bus_fault;  // extra bus shunt admittance
  std::vector<cplx> v;
  std::vector<GenState> gens;
  std::vector<LoadState> loads;

  // Topology, refreshed after every switch.
  std::vector<int> island;  // per bus, -1 when de-energized
  int n_islands = 0;
  std::vector<bool> island_has_slack;
  std::vector<int> island_ref_gen;  // lowest-id online generator, -1 if none
  std::vector<double> island_df;    // QSS frequency deviation, Hz
  std::vector<double> island_theta0;

  bool energized(int bus) const { return island[bus] >= 0; }
  std::vector<bool> gen_status() const {
    std::vector<bool> on;
    for (const auto& g : gens) on.push_back(g.online);
    return on;
  }
  std::vector<bool> branch_status() const {
    std::vector<bool> on;
    for (const auto& b : branches) on.push_back(b.online);
    return on;
  }
};

/// Recomputes islands, trips devices on de-energized buses and zeroes their
/// voltages. QSS island data is carried over through each island's
/// reference generator when possible.
inline void refresh_topology(const GridCase& c, SimState& st) {
  const std::vector<int> old_island = st.island;
  const std::vector<int> old_ref = st.island_ref_gen;
  const std::vector<double> old_df = st.island_df, old_th = st.island_theta0;
  st.island = compute_islands(c, st.branch_status(), st.gen_status());
  const int nb = static_cast<int>(c.buses.size());
  for (int b = 0; b < nb; ++b)
    if (st.island[b] < 0) st.v[b] = 0.0;
  for (std::size_t g = 0; g < c.gens.size(); ++g)
    if (st.gens[g].online && !st.energized(c.bus_index(c.gens[g].bus))) st.gens[g].online = false;
  for (std::size_t l = 0; l < c.loads.size(); ++l)
    if (!st.energized(c.bus_index(c.loads[l].bus))) {
      st.loads[l].online = false;
      st.loads[l].motor_on = false;
    }
  int n = 0;
  for (int b = 0; b < nb; ++b) n = std::max(n, st.island[b] + 1);
  st.n_islands = n;
  st.island_has_slack.assign(n, false);
  st.island_ref_gen.assign(n, -1);
  st.island_df.assign(n, 0.0);
  st.island_theta0.assign(n, 0.0);
  for (int b = 0; b < nb; ++b)
    if (st.island[b] >= 0 && c.buses[b].type == BusType::Slack) st.island_has_slack[st.island[b]] = true;
  for (std::size_t g = 0; g < c.gens.size(); ++g) {
    if (!st.gens[g].online) continue;
    const int isl = st.island[c.bus_index(c.gens[g].bus)];
    int& ref = st.island_ref_gen[isl];
    if (ref < 0 || c.gens[g].id < c.gens[ref].id) ref = static_cast<int>(g);
  }
  // A new island inherits the deviation of the old island holding its
  // reference bus; the pinned angle is kept only when the reference is.
  for (int i = 0; i < n; ++i) {
    const int ref = st.island_ref_gen[i];
    if (ref < 0) continue;
    const int rb = c.bus_index(c.gens[ref].bus);
    const int old = rb < static_cast<int>(old_island.size()) ? old_island[rb] : -1;
    if (old >= 0 && old < static_cast<int>(old_df.size())) {
      st.island_df[i] = old_df[old];
      if (old_ref[old] == ref) {
        st.island_theta0[i] = old_th[old];
        continue;
      }
    }
    st.island_theta0[i] = std::arg(st.v[rb]);
  }
}

/// Initial state mirroring the case's device status, flat start voltages
/// from the bus records, topology refreshed.
inline SimState make_state(const GridCase& c) {
  SimState st;
  st.branches = c.branches;
  st.bus_fault.assign(c.buses.size(), 0.0);
  for (const auto& b : c.buses) st.v.push_back(std::polar(b.vm, b.va * std::numbers::pi / 180.0));
  for (const auto& g : c.gens) {
    GenState gs;
    gs.online = g.online;
    gs.vset = g.vset;
    st.gens.push_back(gs);
  }
  for (const auto& l : c.loads) {
    LoadState ls;
    ls.online = l.online;
    ls.p = l.p * (1.0 - l.motor.share);
    ls.q = l.q;
    ls.scale = l.scale;
    ls.motor_on = l.online && l.has_motor();
    st.loads.push_back(ls);
  }
  refresh_topology(c, st);
  return st;
}

// ---- Output quantities ------------------------------------------------------

/// Electrical current injected by a generator into its bus.
inline cplx gen_current(const GridCase& c, const SimState& st, int g) {
  const auto& gs = st.gens[g];
  if (!gs.online) return 0.0;
  const cplx v = st.v[c.bus_index(c.gens[g].bus)];
  if (st.mode == Mode::Dynamic) return machine_injection(c.gens[g].m, gs.delta, gs.ed, gs.eq, v);
  const int isl = st.island[c.bus_index(c.gens[g].bus)];
  const double p = gs.pagc + ramp_sum(gs.ramps, st.t) - c.gens[g].k_qss(c.fs) * st.island_df[isl];
  return std::conj(cplx(p, gs.qg) / v);
}

inline cplx gen_power(const GridCase& c, const SimState& st, int g) {
  return st.v[c.bus_index(c.gens[g].bus)] * std::conj(gen_current(c, st, g));
}

/// Current magnitude at the from end of a branch.
inline double branch_current(const GridCase& c, const SimState& st, int k) {
  const auto& br = st.branches[k];
  if (!br.online) return 0.0;
  const cplx vf = st.v[c.bus_index(br.from)], vt = st.v[c.bus_index(br.to)];
  const cplx ys = br.series_admittance();
  const cplx i = (ys + cplx(0.0, 0.5 * br.b)) / (br.tap * br.tap) * vf - ys / br.tap * vt;
  return std::abs(i);
}

/// Island frequency in Hz: inertia-weighted rotor speed in the dynamic
/// model, nominal plus the QSS deviation otherwise.
inline double island_frequency(const GridCase& c, const SimState& st, int isl) {
  if (isl < 0) return 0.0;
  if (st.mode == Mode::Qss) return c.fs + st.island_df[isl];
  double hw = 0.0, h = 0.0;
  for (std::size_t g = 0; g < c.gens.size(); ++g) {
    if (!st.gens[g].online || st.island[c.bus_index(c.gens[g].bus)] != isl) continue;
    hw += c.gens[g].m.h * st.gens[g].omega;
    h += c.gens[g].m.h;
  }
  return c.fs * (1.0 + (h > 0 ? hw / h : 0.0));
}

/// Frequency of the island that holds the first online generator.
inline double system_frequency(const GridCase& c, const SimState& st) {
  for (std::size_t g = 0; g < c.gens.size(); ++g)
    if (st.gens[g].online) return island_frequency(c, st, st.island[c.bus_index(c.gens[g].bus)]);
  return c.fs;
}

}  // namespace hesim
