#pragma once

// Semi-explicit DAE x' = f(x, y, t), 0 = g(x, y, t) of the grid in either
// the full dynamic or the QSS formulation, generic over the scalar type so
// the same code yields doubles and power-series coefficients.
//
// In time mode the embedding variable s is local time. In alpha mode s is
// the switching parameter alpha - alpha0, differential states are frozen
// constants and only g is solved.

#include <cmath>
#include <complex>
#include <string>
#include <type_traits>
#include <vector>

#include "hesim/grid.hpp"
#include "hesim/series.hpp"
#include "hesim/state.hpp"

namespace hesim {

enum class SolveKind { Time, Alpha };
enum class Scale { One, Alpha, OneMinusAlpha };

struct ShuntTerm {
  int bus = 0;
  cplx y;
  Scale scale = Scale::Alpha;
};

/// Entry of an admittance change: draws y * V_j out of bus i.
struct StampTerm {
  int i = 0;
  int j = 0;
  cplx y;
  Scale scale = Scale::Alpha;
};

/// Static load power moves linearly from the old values at alpha = 0 to the
/// state's values at alpha = 1.
struct LoadBlend {
  int load = 0;
  double p_old = 0.0;
  double q_old = 0.0;
};

struct Embedding {
  std::vector<Scale> gen_scale;   // empty means all One
  std::vector<Scale> load_scale;  // empty means all One
  std::vector<ShuntTerm> shunts;
  std::vector<StampTerm> stamps;
  std::vector<LoadBlend> blends;
};

template <class T>
T constant_like(const T& like, double v) {
  if constexpr (std::is_same_v<T, double>) {
    (void)like;
    return v;
  } else {
    return T(like.size(), v);
  }
}

class GridDae {
 public:
  GridDae(const GridCase& c, const SimState& st, SolveKind kind, Embedding emb = {}, double alpha0 = 0.0)
      : c_(&c), st_(&st), kind_(kind), emb_(std::move(emb)), t0_(st.t), alpha0_(alpha0), ws_(c.omega_s()) {
    build_layout();
  }

  std::size_t nx() const { return kind_ == SolveKind::Time ? full_nx_ : 0; }
  std::size_t ny() const { return ny_; }
  SolveKind kind() const { return kind_; }
  Mode mode() const { return st_->mode; }
  double t0() const { return t0_; }

  /// Packs the state into (x, y). In alpha mode x comes back empty.
  void pack(const SimState& st, std::vector<double>& x, std::vector<double>& y) const {
    std::vector<double> full(full_nx_, 0.0);
    y.assign(ny_, 0.0);
    pack_full(st, full, y);
    if (kind_ == SolveKind::Time)
      x = std::move(full);
    else
      x.clear();
  }

  /// Writes (x, y) back into st. In alpha mode x is ignored.
  void unpack(const double* x, const double* y, SimState& st) const {
    const auto& c = *c_;
    const bool timed = kind_ == SolveKind::Time;
    for (int b = 0; b < nbus(); ++b)
      if (bus_y_[b] >= 0) st.v[b] = {y[bus_y_[b]], y[bus_y_[b] + 1]};
    for (std::size_t g = 0; g < c.gens.size(); ++g) {
      auto& gs = st.gens[g];
      if (gen_y_[g] >= 0) gs.qg = y[gen_y_[g]];
      if (gen_x_[g] < 0 || !timed) continue;
      const double* p = x + gen_x_[g];
      if (st_->mode == Mode::Dynamic) {
        gs.delta = p[0];
        gs.omega = p[1];
        gs.eq = p[2];
        gs.ed = p[3];
        gs.vm = p[4];
        gs.g1 = p[5];
        gs.g2 = p[6];
        gs.pagc = p[7];
      } else {
        gs.pagc = p[0];
      }
    }
    for (std::size_t l = 0; l < c.loads.size(); ++l) {
      const double* p = nullptr;
      if (motor_y_[l] >= 0)
        p = y + motor_y_[l];
      else if (motor_x_[l] >= 0 && timed)
        p = x + motor_x_[l];
      if (!p) continue;
      st.loads[l].slip = p[0];
      st.loads[l].er = p[1];
      st.loads[l].em = p[2];
    }
    for (int i = 0; i < st_->n_islands; ++i)
      if (island_y_[i] >= 0) st.island_df[i] = y[island_y_[i]];
  }

  template <class T>
  void eval(const T* x, const T* y, const T& s, T* f, T* g) const;

  // Layout accessors; -1 means absent.
  int bus_y(int b) const { return bus_y_[b]; }
  int gen_x(int g) const { return gen_x_[g]; }
  int gen_y(int g) const { return gen_y_[g]; }
  int motor_x(int l) const { return motor_x_[l]; }
  int motor_y(int l) const { return motor_y_[l]; }
  int island_y(int i) const { return island_y_[i]; }
  const std::vector<double>& frozen_x() const { return frozen_x_; }

 private:
  int nbus() const { return static_cast<int>(c_->buses.size()); }

  Scale gen_scale(std::size_t g) const { return emb_.gen_scale.empty() ? Scale::One : emb_.gen_scale[g]; }
  Scale load_scale(std::size_t l) const { return emb_.load_scale.empty() ? Scale::One : emb_.load_scale[l]; }

  void build_layout() {
    const auto& c = *c_;
    const auto& st = *st_;
    const bool dyn = st.mode == Mode::Dynamic;
    const int nb = nbus();
    bus_y_.assign(nb, -1);
    gen_x_.assign(c.gens.size(), -1);
    gen_y_.assign(c.gens.size(), -1);
    motor_x_.assign(c.loads.size(), -1);
    motor_y_.assign(c.loads.size(), -1);
    island_y_.assign(st.n_islands, -1);
    std::size_t nx = 0, ny = 0;
    for (int b = 0; b < nb; ++b)
      if (st.island[b] >= 0) {
        bus_y_[b] = static_cast<int>(ny);
        ny += 2;
      }
    for (std::size_t g = 0; g < c.gens.size(); ++g) {
      if (!st.gens[g].online) continue;
      gen_x_[g] = static_cast<int>(nx);
      nx += dyn ? 8 : 1;
      if (!dyn) gen_y_[g] = static_cast<int>(ny++);
    }
    for (std::size_t l = 0; l < c.loads.size(); ++l) {
      if (!st.loads[l].online || !st.loads[l].motor_on) continue;
      if (dyn) {
        motor_x_[l] = static_cast<int>(nx);
        nx += 3;
      } else {
        motor_y_[l] = static_cast<int>(ny);
        ny += 3;
      }
    }
    if (!dyn)
      for (int i = 0; i < st.n_islands; ++i) island_y_[i] = static_cast<int>(ny++);
    full_nx_ = nx;
    ny_ = ny;

    rows_.assign(nb, {});
    Eigen::MatrixXcd ybus = build_admittance(c, st.branches);
    for (int b = 0; b < nb; ++b) ybus(b, b) += st.bus_fault[b];
    for (int i = 0; i < nb; ++i) {
      if (st.island[i] < 0) continue;
      for (int j = 0; j < nb; ++j)
        if (st.island[j] >= 0 && ybus(i, j) != cplx(0.0)) rows_[i].push_back({j, ybus(i, j)});
    }
    slack_v_.assign(nb, 0.0);
    for (int b = 0; b < nb; ++b)
      if (c.buses[b].type == BusType::Slack)
        slack_v_[b] = std::polar(c.buses[b].vm, c.buses[b].va * std::numbers::pi / 180.0);
    island_h_.assign(st.n_islands, 0.0);
    for (std::size_t g = 0; g < c.gens.size(); ++g)
      if (st.gens[g].online) island_h_[st.island[c.bus_index(c.gens[g].bus)]] += c.gens[g].m.h;

    frozen_x_.assign(full_nx_, 0.0);
    std::vector<double> ydummy(ny_, 0.0);
    pack_full(st, frozen_x_, ydummy);
  }

  void pack_full(const SimState& st, std::vector<double>& x, std::vector<double>& y) const {
    const auto& c = *c_;
    for (int b = 0; b < nbus(); ++b)
      if (bus_y_[b] >= 0) {
        y[bus_y_[b]] = st.v[b].real();
        y[bus_y_[b] + 1] = st.v[b].imag();
      }
    for (std::size_t g = 0; g < c.gens.size(); ++g) {
      const auto& gs = st.gens[g];
      if (gen_y_[g] >= 0) y[gen_y_[g]] = gs.qg;
      if (gen_x_[g] < 0) continue;
      double* p = x.data() + gen_x_[g];
      if (st_->mode == Mode::Dynamic) {
        p[0] = gs.delta;
        p[1] = gs.omega;
        p[2] = gs.eq;
        p[3] = gs.ed;
        p[4] = gs.vm;
        p[5] = gs.g1;
        p[6] = gs.g2;
        p[7] = gs.pagc;
      } else {
        p[0] = gs.pagc;
      }
    }
    for (std::size_t l = 0; l < c.loads.size(); ++l) {
      double* p = nullptr;
      if (motor_y_[l] >= 0) p = y.data() + motor_y_[l];
      if (motor_x_[l] >= 0) p = x.data() + motor_x_[l];
      if (!p) continue;
      p[0] = st.loads[l].slip;
      p[1] = st.loads[l].er;
      p[2] = st.loads[l].em;
    }
    for (int i = 0; i < st_->n_islands; ++i)
      if (island_y_[i] >= 0) y[island_y_[i]] = st.island_df[i];
  }

  struct Entry {
    int j;
    cplx y;
  };

  const GridCase* c_;
  const SimState* st_;
  SolveKind kind_;
  Embedding emb_;
  double t0_;
  double alpha0_;
  double ws_;
  std::size_t full_nx_ = 0, ny_ = 0;
  std::vector<int> bus_y_, gen_x_, gen_y_, motor_x_, motor_y_, island_y_;
  std::vector<std::vector<Entry>> rows_;
  std::vector<cplx> slack_v_;
  std::vector<double> island_h_;
  std::vector<double> frozen_x_;
};

template <class T>
void GridDae::eval(const T* x, const T* y, const T& s, T* f, T* g) const {
  const auto& c = *c_;
  const auto& st = *st_;
  const bool timed = kind_ == SolveKind::Time;
  const bool dyn = st.mode == Mode::Dynamic;
  const T zero = constant_like(s, 0.0);
  const T one = constant_like(s, 1.0);
  const T time = timed ? s + t0_ : constant_like(s, t0_);
  const T alpha = timed ? one : s + alpha0_;
  auto X = [&](int i) -> T { return timed ? x[i] : constant_like(s, frozen_x_[i]); };
  auto scale_of = [&](Scale sc) -> T {
    switch (sc) {
      case Scale::Alpha: return alpha;
      case Scale::OneMinusAlpha: return one - alpha;
      default: return one;
    }
  };

  const int nb = nbus();
  std::vector<T> vx(nb, zero), vy(nb, zero), ix(nb, zero), iy(nb, zero);
  for (int b = 0; b < nb; ++b)
    if (bus_y_[b] >= 0) {
      vx[b] = y[bus_y_[b]];
      vy[b] = y[bus_y_[b] + 1];
    }

  // Network: mismatch = device injections - Y V.
  for (int i = 0; i < nb; ++i)
    for (const auto& e : rows_[i]) {
      ix[i] -= e.y.real() * vx[e.j] - e.y.imag() * vy[e.j];
      iy[i] -= e.y.real() * vy[e.j] + e.y.imag() * vx[e.j];
    }
  for (const auto& sh : emb_.shunts) {
    const T k = scale_of(sh.scale);
    ix[sh.bus] -= k * (sh.y.real() * vx[sh.bus] - sh.y.imag() * vy[sh.bus]);
    iy[sh.bus] -= k * (sh.y.real() * vy[sh.bus] + sh.y.imag() * vx[sh.bus]);
  }
  for (const auto& sp : emb_.stamps) {
    const T k = scale_of(sp.scale);
    ix[sp.i] -= k * (sp.y.real() * vx[sp.j] - sp.y.imag() * vy[sp.j]);
    iy[sp.i] -= k * (sp.y.real() * vy[sp.j] + sp.y.imag() * vx[sp.j]);
  }

  // Machines.
  if (dyn) {
    std::vector<T> coi(st.n_islands, zero);
    if (timed)
      for (std::size_t k = 0; k < c.gens.size(); ++k) {
        if (gen_x_[k] < 0) continue;
        const int isl = st.island[c.bus_index(c.gens[k].bus)];
        coi[isl] += (c.gens[k].m.h / island_h_[isl]) * x[gen_x_[k] + 1];
      }
    for (std::size_t k = 0; k < c.gens.size(); ++k) {
      if (gen_x_[k] < 0) continue;
      const auto& gen = c.gens[k];
      const auto& m = gen.m;
      const int b = c.bus_index(gen.bus);
      const int base = gen_x_[k];
      const T delta = X(base), omega = X(base + 1), eq = X(base + 2), ed = X(base + 3);
      const auto [sd, cd] = sincos(delta);
      const T vd = vx[b] * sd - vy[b] * cd;
      const T vq = vx[b] * cd + vy[b] * sd;
      const double det = m.ra * m.ra + m.xd1 * m.xq1;
      const T ad = ed - vd, aq = eq - vq;
      const T id = (m.ra * ad + m.xq1 * aq) / det;
      const T iq = (m.ra * aq - m.xd1 * ad) / det;
      const T k_sc = scale_of(gen_scale(k));
      ix[b] += k_sc * (sd * id + cd * iq);
      iy[b] += k_sc * (sd * iq - cd * id);
      if (!timed) continue;
      const T vm = X(base + 4), g1 = X(base + 5), g2 = X(base + 6), pagc = X(base + 7);
      const T te = ed * id + eq * iq + (m.xq1 - m.xd1) * id * iq;
      const T vmag = sqrt(vx[b] * vx[b] + vy[b] * vy[b]);
      const T tm0 = pagc + ramp_sum(st.gens[k].ramps, time);
      const int isl = st.island[b];
      f[base] = ws_ * omega;
      f[base + 1] = (g2 - te - m.d * omega) / (2.0 * m.h);
      f[base + 2] = (vm - eq - (m.xd - m.xd1) * id) / m.td01;
      f[base + 3] = ((m.xq - m.xq1) * iq - ed) / m.tq01;
      f[base + 4] = (gen.avr.ka * (st.gens[k].vref - vmag) - vm) / gen.avr.ta;
      f[base + 5] = (tm0 - omega / gen.gov.r - g1) / gen.gov.t1;
      f[base + 6] = (g1 - g2) / gen.gov.t2;
      f[base + 7] = (-c.fs / gen.tg) * coi[isl];
    }
  } else {
    for (std::size_t k = 0; k < c.gens.size(); ++k) {
      if (gen_x_[k] < 0) continue;
      const auto& gen = c.gens[k];
      const int b = c.bus_index(gen.bus);
      const T pagc = X(gen_x_[k]);
      const T qg = y[gen_y_[k]];
      const T df = y[island_y_[st.island[b]]];
      const T p = pagc + ramp_sum(st.gens[k].ramps, time) - gen.k_qss(c.fs) * df;
      const T m2 = vx[b] * vx[b] + vy[b] * vy[b];
      const T u = 1.0 / m2;
      const T k_sc = scale_of(gen_scale(k));
      ix[b] += k_sc * ((p * vx[b] + qg * vy[b]) * u);
      iy[b] += k_sc * ((p * vy[b] - qg * vx[b]) * u);
      const int lim = st.gens[k].q_limit;
      g[gen_y_[k]] = lim == 0 ? m2 - st.gens[k].vset * st.gens[k].vset : qg - (lim > 0 ? gen.qmax : gen.qmin);
      if (timed) f[gen_x_[k]] = (-1.0 / gen.tg) * df;
    }
  }

  // Loads: static ZIP part and motors.
  for (std::size_t l = 0; l < c.loads.size(); ++l) {
    const auto& ls = st.loads[l];
    if (!ls.online) continue;
    const auto& ld = c.loads[l];
    const int b = c.bus_index(ld.bus);
    const T k_sc = scale_of(load_scale(l));
    T p = constant_like(s, ls.p), q = constant_like(s, ls.q);
    for (const auto& bl : emb_.blends)
      if (bl.load == static_cast<int>(l)) {
        p = bl.p_old + alpha * (ls.p - bl.p_old);
        q = bl.q_old + alpha * (ls.q - bl.q_old);
      }
    if (ls.p != 0.0 || ls.q != 0.0 || !emb_.blends.empty()) {
      const T lambda = ls.scale + ramp_sum(ls.ramps, time);
      T factor = constant_like(s, ld.fz);
      if (ld.fi != 0.0 || ld.fp != 0.0) {
        const T u = 1.0 / (vx[b] * vx[b] + vy[b] * vy[b]);
        if (ld.fp != 0.0) factor += ld.fp * u;
        if (ld.fi != 0.0) factor += ld.fi * sqrt(u);
      }
      const T kf = k_sc * lambda * factor;
      ix[b] -= kf * (p * vx[b] + q * vy[b]);
      iy[b] -= kf * (p * vy[b] - q * vx[b]);
    }
    if (motor_x_[l] < 0 && motor_y_[l] < 0) continue;
    const MotorParams mp = ld.motor_sys();
    const bool alg = motor_y_[l] >= 0;
    const int base = alg ? motor_y_[l] : motor_x_[l];
    const T slip = alg ? y[base] : X(base);
    const T er = alg ? y[base + 1] : X(base + 1);
    const T em = alg ? y[base + 2] : X(base + 2);
    const cplx zinv = 1.0 / cplx(mp.rs, mp.x1());
    const T dx = vx[b] - er, dy = vy[b] - em;
    const T mix = zinv.real() * dx - zinv.imag() * dy;
    const T miy = zinv.imag() * dx + zinv.real() * dy;
    ix[b] -= k_sc * mix;
    iy[b] -= k_sc * miy;
    if (!alg && !timed) continue;
    const double dxm = mp.x0() - mp.x1();
    const double t01 = mp.t01(c.fs);
    const T d_er = ws_ * slip * em - (er + dxm * miy) / t01;
    const T d_em = (dxm * mix - em) / t01 - ws_ * slip * er;
    const T w = 1.0 - slip;
    const T te = er * mix + em * miy;
    const T tm = ls.torque_coeff * (mp.a + (1.0 - mp.a) * w * w);
    const T d_s = (tm - te) / (2.0 * mp.h);
    T* out = alg ? g : f;
    out[base] = d_s;
    out[base + 1] = d_er;
    out[base + 2] = d_em;
  }

  // Bus rows.
  for (int b = 0; b < nb; ++b) {
    if (bus_y_[b] < 0) continue;
    if (c.buses[b].type == BusType::Slack) {
      g[bus_y_[b]] = vx[b] - slack_v_[b].real();
      g[bus_y_[b] + 1] = vy[b] - slack_v_[b].imag();
    } else {
      g[bus_y_[b]] = ix[b];
      g[bus_y_[b] + 1] = iy[b];
    }
  }

  // QSS island rows: zero deviation against a slack bus, otherwise pin the
  // reference generator's terminal angle.
  if (!dyn)
    for (int i = 0; i < st.n_islands; ++i) {
      const int row = island_y_[i];
      if (st.island_has_slack[i] || st.island_ref_gen[i] < 0) {
        g[row] = y[row];
      } else {
        const int b = c.bus_index(c.gens[st.island_ref_gen[i]].bus);
        const double th = st.island_theta0[i];
        g[row] = vy[b] * std::cos(th) - vx[b] * std::sin(th);
      }
    }
}

}  // namespace hesim
