#pragma once

// Embedded power flow and equilibrium initialization. The embedding starts
// from a flat profile at each island's slack voltage where only the series
// branch network is present; alpha scales injections, shunt-type admittance
// and the PV magnitude targets up to the real case.

#include <cmath>
#include <complex>
#include <vector>

#include "hesim/dae.hpp"
#include "hesim/he_engine.hpp"
#include "hesim/state.hpp"

namespace hesim {

struct PfResult {
  std::vector<cplx> v;
  std::vector<cplx> gen_s;  // generated complex power per generator (0 if offline)
  int stages = 0;
};

class PfModel {
 public:
  /// motor_s: consumed complex power of each load's motor, treated as constant power.
  PfModel(const GridCase& c, const SimState& st, const std::vector<cplx>& motor_s, double alpha0)
      : c_(&c), st_(&st), motor_s_(&motor_s), alpha0_(alpha0) {
    const int nb = static_cast<int>(c.buses.size());
    bus_y_.assign(nb, -1);
    fixed_v_.assign(nb, 0.0);
    is_fixed_.assign(nb, false);
    gen_y_.assign(c.gens.size(), -1);
    for (int b = 0; b < nb; ++b)
      if (st.island[b] >= 0) {
        bus_y_[b] = static_cast<int>(ny_);
        ny_ += 2;
        if (c.buses[b].type == BusType::Slack) {
          is_fixed_[b] = true;
          fixed_v_[b] = std::polar(c.buses[b].vm, c.buses[b].va * std::numbers::pi / 180.0);
        }
      }
    island_v_.assign(st.n_islands, 0.0);
    for (int b = 0; b < nb; ++b)
      if (is_fixed_[b]) island_v_[st.island[b]] = fixed_v_[b];
    slack_gen_.assign(st.n_islands, -1);
    for (int i = 0; i < st.n_islands; ++i) {
      if (st.island_has_slack[i]) continue;
      const int g = st.island_ref_gen[i];
      slack_gen_[i] = g;
      const int b = c.bus_index(c.gens[g].bus);
      is_fixed_[b] = true;
      fixed_v_[b] = std::polar(c.gens[g].vset, c.buses[b].va * std::numbers::pi / 180.0);
      island_v_[i] = fixed_v_[b];
    }
    for (std::size_t g = 0; g < c.gens.size(); ++g) {
      if (!st.gens[g].online) continue;
      const int b = c.bus_index(c.gens[g].bus);
      if (slack_gen_[st.island[b]] == static_cast<int>(g)) continue;
      gen_y_[g] = static_cast<int>(ny_++);
    }
    Eigen::MatrixXcd y = build_admittance(c, st.branches);
    for (int b = 0; b < nb; ++b) y(b, b) += st.bus_fault[b];
    Eigen::MatrixXcd y0 = Eigen::MatrixXcd::Zero(nb, nb);
    for (const auto& br : st.branches) {
      if (!br.online) continue;
      const int f = c.bus_index(br.from), t = c.bus_index(br.to);
      const cplx ys = br.series_admittance();
      y0(f, f) += ys;
      y0(t, t) += ys;
      y0(f, t) -= ys;
      y0(t, f) -= ys;
    }
    const Eigen::MatrixXcd ysh = y - y0;
    rows0_.assign(nb, {});
    rows1_.assign(nb, {});
    for (int i = 0; i < nb; ++i) {
      if (bus_y_[i] < 0) continue;
      for (int j = 0; j < nb; ++j) {
        if (bus_y_[j] < 0) continue;
        if (std::abs(y0(i, j)) > 0) rows0_[i].push_back({j, y0(i, j)});
        if (std::abs(ysh(i, j)) > 1e-300) rows1_[i].push_back({j, ysh(i, j)});
      }
    }
  }

  std::size_t nx() const { return 0; }
  std::size_t ny() const { return ny_; }

  std::vector<double> anchor() const {
    std::vector<double> y(ny_, 0.0);
    for (std::size_t b = 0; b < bus_y_.size(); ++b)
      if (bus_y_[b] >= 0) {
        const cplx v = island_v_[st_->island[b]];
        y[bus_y_[b]] = v.real();
        y[bus_y_[b] + 1] = v.imag();
      }
    return y;
  }

  template <class T>
  void eval(const T*, const T* y, const T& s, T*, T* g) const {
    const auto& c = *c_;
    const auto& st = *st_;
    const int nb = static_cast<int>(c.buses.size());
    const T zero = constant_like(s, 0.0);
    const T alpha = s + alpha0_;
    std::vector<T> vx(nb, zero), vy(nb, zero), ix(nb, zero), iy(nb, zero);
    for (int b = 0; b < nb; ++b)
      if (bus_y_[b] >= 0) {
        vx[b] = y[bus_y_[b]];
        vy[b] = y[bus_y_[b] + 1];
      }
    for (int i = 0; i < nb; ++i) {
      for (const auto& e : rows0_[i]) {
        ix[i] -= e.y.real() * vx[e.j] - e.y.imag() * vy[e.j];
        iy[i] -= e.y.real() * vy[e.j] + e.y.imag() * vx[e.j];
      }
      for (const auto& e : rows1_[i]) {
        ix[i] -= alpha * (e.y.real() * vx[e.j] - e.y.imag() * vy[e.j]);
        iy[i] -= alpha * (e.y.real() * vy[e.j] + e.y.imag() * vx[e.j]);
      }
    }
    // Constant-power injection (p - jq) V / |V|^2 with p, q generated.
    auto inject_pq = [&](int b, const T& p, const T& q) {
      const T u = 1.0 / (vx[b] * vx[b] + vy[b] * vy[b]);
      ix[b] += (p * vx[b] + q * vy[b]) * u;
      iy[b] += (p * vy[b] - q * vx[b]) * u;
    };
    for (std::size_t k = 0; k < c.gens.size(); ++k) {
      if (gen_y_[k] < 0) continue;
      const int b = c.bus_index(c.gens[k].bus);
      inject_pq(b, alpha * c.gens[k].p0, y[gen_y_[k]]);
      const double vs2 = std::norm(island_v_[st.island[b]]);
      const double vset2 = c.gens[k].vset * c.gens[k].vset;
      g[gen_y_[k]] = vx[b] * vx[b] + vy[b] * vy[b] - (vs2 + alpha * (vset2 - vs2));
    }
    for (std::size_t l = 0; l < c.loads.size(); ++l) {
      const auto& ls = st.loads[l];
      if (!ls.online) continue;
      const auto& ld = c.loads[l];
      const int b = c.bus_index(ld.bus);
      const double lam = ls.scale + ramp_sum(ls.ramps, st.t);
      T factor = constant_like(s, ld.fz);
      const T u = 1.0 / (vx[b] * vx[b] + vy[b] * vy[b]);
      if (ld.fp != 0.0) factor += ld.fp * u;
      if (ld.fi != 0.0) factor += ld.fi * sqrt(u);
      const T kf = (lam * alpha) * factor;
      ix[b] -= kf * (ls.p * vx[b] + ls.q * vy[b]);
      iy[b] -= kf * (ls.p * vy[b] - ls.q * vx[b]);
      if (ls.motor_on) {
        const cplx sm = (*motor_s_)[l];
        inject_pq(b, -alpha * sm.real(), -alpha * sm.imag());
      }
    }
    for (int b = 0; b < nb; ++b) {
      if (bus_y_[b] < 0) continue;
      if (is_fixed_[b]) {
        g[bus_y_[b]] = vx[b] - fixed_v_[b].real();
        g[bus_y_[b] + 1] = vy[b] - fixed_v_[b].imag();
      } else {
        g[bus_y_[b]] = ix[b];
        g[bus_y_[b] + 1] = iy[b];
      }
    }
  }

  int bus_y(int b) const { return bus_y_[b]; }
  int gen_y(int g) const { return gen_y_[g]; }

 private:
  struct Entry {
    int j;
    cplx y;
  };
  const GridCase* c_;
  const SimState* st_;
  const std::vector<cplx>* motor_s_;
  double alpha0_;
  std::size_t ny_ = 0;
  std::vector<int> bus_y_, gen_y_, slack_gen_;
  std::vector<bool> is_fixed_;
  std::vector<cplx> fixed_v_, island_v_;
  std::vector<std::vector<Entry>> rows0_, rows1_;
};

/// Current drawn at each bus by online loads (static part plus motor).
inline std::vector<cplx> load_currents(const GridCase& c, const SimState& st, const std::vector<cplx>& v,
                                       const std::vector<cplx>* motor_s = nullptr) {
  std::vector<cplx> i(c.buses.size(), 0.0);
  for (std::size_t l = 0; l < c.loads.size(); ++l) {
    const auto& ls = st.loads[l];
    if (!ls.online) continue;
    const auto& ld = c.loads[l];
    const int b = c.bus_index(ld.bus);
    const double m = std::abs(v[b]);
    const double lam = ls.scale + ramp_sum(ls.ramps, st.t);
    i[b] += lam * cplx(ls.p, -ls.q) * v[b] * (ld.fz + ld.fi / m + ld.fp / (m * m));
    if (ls.motor_on) {
      if (motor_s)
        i[b] += std::conj((*motor_s)[l] / v[b]);
      else
        i[b] += (v[b] - cplx(ls.er, ls.em)) / cplx(ld.motor_sys().rs, ld.motor_sys().x1());
    }
  }
  return i;
}

/// Power flow by holomorphic embedding; motors are held at the given
/// constant-power consumption.
inline PfResult solve_powerflow_he(const GridCase& c, const SimState& st, const std::vector<cplx>& motor_s,
                                   const AlphaOptions& opt = {}) {
  for (int i = 0; i < st.n_islands; ++i)
    if (!st.island_has_slack[i] && st.island_ref_gen[i] < 0)
      throw Error(ErrorKind::IslandWithoutGeneration, "island " + std::to_string(i) + " has no source");
  auto make = [&](double a0) { return PfModel(c, st, motor_s, a0); };
  const PfModel m0 = make(0.0);
  AlphaResult ar;
  try {
    ar = solve_alpha(make, m0.anchor(), opt);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NoConvergenceAtAlpha1 || e.kind() == ErrorKind::SingularJacobian)
      throw Error(ErrorKind::PowerFlowInfeasible, std::string("power flow: ") + e.what());
    throw;
  }
  PfResult r;
  r.stages = ar.stages;
  const int nb = static_cast<int>(c.buses.size());
  r.v.assign(nb, 0.0);
  for (int b = 0; b < nb; ++b)
    if (m0.bus_y(b) >= 0) r.v[b] = {ar.y[m0.bus_y(b)], ar.y[m0.bus_y(b) + 1]};
  Eigen::MatrixXcd y = build_admittance(c, st.branches);
  for (int b = 0; b < nb; ++b) y(b, b) += st.bus_fault[b];
  Eigen::VectorXcd vv(nb);
  for (int b = 0; b < nb; ++b) vv[b] = r.v[b];
  const Eigen::VectorXcd inet = y * vv;
  const auto il = load_currents(c, st, r.v, &motor_s);
  r.gen_s.assign(c.gens.size(), 0.0);
  for (std::size_t g = 0; g < c.gens.size(); ++g) {
    if (!st.gens[g].online) continue;
    const int b = c.bus_index(c.gens[g].bus);
    r.gen_s[g] = r.v[b] * std::conj(inet[b] + il[b]);
  }
  return r;
}

/// Machine states in steady state at terminal voltage v delivering s.
inline void init_machine(const Generator& gen, GenState& gs, cplx v, cplx s) {
  const auto& m = gen.m;
  const cplx i = std::conj(s / v);
  const cplx eq_axis = v + cplx(m.ra, m.xq) * i;
  const double d = std::arg(eq_axis);
  const double sd = std::sin(d), cd = std::cos(d);
  const double vd = v.real() * sd - v.imag() * cd, vq = v.real() * cd + v.imag() * sd;
  const double id = i.real() * sd - i.imag() * cd, iq = i.real() * cd + i.imag() * sd;
  (void)vd;
  gs.delta = d;
  gs.omega = 0.0;
  gs.ed = (m.xq - m.xq1) * iq;
  gs.eq = vq + m.ra * iq + m.xd1 * id;
  gs.vm = gs.eq + (m.xd - m.xd1) * id;
  gs.vref = std::abs(v) + gs.vm / gen.avr.ka;
  const double te = gs.ed * id + gs.eq * iq + (m.xq1 - m.xd1) * id * iq;
  gs.g1 = gs.g2 = te;
  gs.pagc = te - ramp_sum(gs.ramps, 0.0);
  gs.vset = std::abs(v);
  gs.qg = s.imag();
}

/// Steady operating point of the case at t = 0 in the dynamic formulation.
inline SimState init_equilibrium(const GridCase& c, const AlphaOptions& opt = {}) {
  validate(c);
  SimState st = make_state(c);
  std::vector<cplx> motor_s(c.loads.size(), 0.0);
  for (std::size_t l = 0; l < c.loads.size(); ++l)
    if (st.loads[l].motor_on) {
      const double pm = c.loads[l].p * c.loads[l].motor.share;
      motor_s[l] = {pm, 0.5 * pm};
    }
  PfResult pf;
  for (int it = 0; it < 50; ++it) {
    for (std::size_t l = 0; l < c.loads.size(); ++l)
      if (st.loads[l].motor_on) st.loads[l].q = c.loads[l].q - motor_s[l].imag();
    pf = solve_powerflow_he(c, st, motor_s, opt);
    double change = 0.0;
    for (std::size_t l = 0; l < c.loads.size(); ++l) {
      if (!st.loads[l].motor_on) continue;
      const cplx v = pf.v[c.bus_index(c.loads[l].bus)];
      const auto op = motor_operating_point(c.loads[l].motor_sys(), v, motor_s[l].real(), c.fs);
      const cplx s_new = v * std::conj(op.current);
      change = std::max(change, std::abs(s_new.imag() - motor_s[l].imag()));
      motor_s[l] = {motor_s[l].real(), s_new.imag()};
      st.loads[l].slip = op.slip;
      st.loads[l].er = op.e1.real();
      st.loads[l].em = op.e1.imag();
      st.loads[l].torque_coeff = op.torque_coeff;
    }
    if (change < 1e-12) break;
  }
  st.v = pf.v;
  for (std::size_t g = 0; g < c.gens.size(); ++g)
    if (st.gens[g].online) init_machine(c.gens[g], st.gens[g], st.v[c.bus_index(c.gens[g].bus)], pf.gen_s[g]);
  refresh_topology(c, st);
  return st;
}

/// Max-norm of (f, g) of the dynamic formulation at the state.
inline double steady_residual(const GridCase& c, const SimState& st) {
  GridDae m(c, st, SolveKind::Time);
  std::vector<double> x, y, f, g;
  m.pack(st, x, y);
  eval_double(m, x, y, 0.0, f, g);
  return std::max(max_abs(f), max_abs(g));
}

}  // namespace hesim
