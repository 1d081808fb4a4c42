#pragma once

// Validation oracles independent of the series machinery: the 2-bus closed
// forms, Newton with finite-difference Jacobians, fixed-step modified Euler
// and trapezoidal integration, and an adaptive Dormand-Prince integration
// (Boost.Odeint) at tight tolerance.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "hesim/errors.hpp"

namespace hesim {

// ---- 2-bus closed forms ------------------------------------------------------

/// Source E behind z = r + jx feeding a constant-power load
/// lambda(t) (P + jQ) with lambda(t) = rate * t.
struct TwoBusCase {
  double e = 1.01;
  double r = 0.01;
  double x = 0.05;
  double p = 0.1;
  double q = 0.3;
  double rate = 1.0;
  double i_th = 0.0;
};

/// Squared line current at time t on the upper (stable) voltage branch.
inline double two_bus_current_sq(const TwoBusCase& c, double t) {
  const double lam = c.rate * t;
  const double z2 = c.r * c.r + c.x * c.x;
  const double a = c.p * c.r + c.q * c.x;
  const double b = c.q * c.r - c.p * c.x;
  const double disc = c.e * c.e / 4.0 - a * lam - b * b * lam * lam / (c.e * c.e);
  if (disc < 0) throw Error(ErrorKind::PastCollapse, "load level beyond the nose point");
  return (c.e * c.e / 2.0 - a * lam - c.e * std::sqrt(disc)) / z2;
}

/// Load level at the nose point (discriminant root).
inline double two_bus_collapse_time(const TwoBusCase& c) {
  const double a = c.p * c.r + c.q * c.x;
  const double b = c.q * c.r - c.p * c.x;
  const double e2 = c.e * c.e;
  const double qa = b * b / e2, qb = a, qc = -e2 / 4.0;
  const double lam = qa > 0 ? (-qb + std::sqrt(qb * qb - 4 * qa * qc)) / (2 * qa) : -qc / qb;
  return lam / c.rate;
}

/// Instant at which the line current reaches i_th.
inline double two_bus_event_time(const TwoBusCase& c) {
  const double z2 = c.r * c.r + c.x * c.x;
  const double pa = c.p * c.r + c.q * c.x;
  const double pb = c.q * c.r - c.p * c.x;
  const double i2 = c.i_th * c.i_th;
  const double a = pa * pa + pb * pb;
  const double b = 2.0 * pa * z2 * i2;
  const double cc = z2 * z2 * i2 * i2 - c.e * c.e * z2 * i2;
  const double d = b * b - 4.0 * a * cc;
  if (d < 0) throw Error(ErrorKind::Unreachable, "current threshold is never reached");
  const double lam = (std::sqrt(d) - b) / (2.0 * a);
  const double t = lam / c.rate;
  if (t < 0 || t > two_bus_collapse_time(c)) throw Error(ErrorKind::Unreachable, "threshold lies beyond collapse");
  return t;
}

// ---- Newton ------------------------------------------------------------------

struct NewtonOptions {
  double tol = 1e-12;
  int max_iter = 30;
  double fd_step = 1e-7;
};

/// Damped Newton on r(z) = 0 with a central-difference Jacobian.
inline void newton_fd(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& r, Eigen::VectorXd& z,
                      const NewtonOptions& opt = {}) {
  const Eigen::Index n = z.size();
  Eigen::VectorXd f(n), fp(n), fm(n);
  r(z, f);
  for (int it = 0; it < opt.max_iter; ++it) {
    const double norm = f.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(norm)) break;
    if (norm <= opt.tol) return;
    Eigen::MatrixXd j(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double h = opt.fd_step * std::max(1.0, std::abs(z[k]));
      Eigen::VectorXd zp = z, zm = z;
      zp[k] += h;
      zm[k] -= h;
      r(zp, fp);
      r(zm, fm);
      j.col(k) = (fp - fm) / (2.0 * h);
    }
    const Eigen::VectorXd dz = j.fullPivLu().solve(f);
    double step = 1.0;
    for (int ls = 0; ls < 12; ++ls) {
      const Eigen::VectorXd zt = z - step * dz;
      Eigen::VectorXd ft(n);
      r(zt, ft);
      if (std::isfinite(ft.lpNorm<Eigen::Infinity>()) && ft.lpNorm<Eigen::Infinity>() < norm) {
        z = zt;
        f = ft;
        break;
      }
      step *= 0.5;
      if (ls == 11) {
        z = zt;
        f = ft;
      }
    }
  }
  if (!(f.lpNorm<Eigen::Infinity>() <= std::max(opt.tol * 1e3, 1e-9)))
    throw Error(ErrorKind::StepRejectionLimit, "Newton did not converge");
}

/// Solves g(x, y, s) = 0 for y with x fixed.
template <class Model>
void solve_algebraic(const Model& m, const std::vector<double>& x, std::vector<double>& y, double s,
                     const NewtonOptions& opt = {}) {
  if (y.empty()) return;
  std::vector<double> f(m.nx()), g(m.ny()), yy(y.size());
  auto res = [&](const Eigen::VectorXd& z, Eigen::VectorXd& out) {
    for (std::size_t i = 0; i < yy.size(); ++i) yy[i] = z[static_cast<Eigen::Index>(i)];
    m.eval(x.data(), yy.data(), s, f.data(), g.data());
    out = Eigen::Map<Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
  };
  Eigen::VectorXd z = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  newton_fd(res, z, opt);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = z[static_cast<Eigen::Index>(i)];
}

// ---- Integration -------------------------------------------------------------

enum class RefMethod { ModifiedEuler, Trapezoidal, Adaptive };

struct RefTrajectory {
  std::vector<double> t;
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> y;
};

struct RefOptions {
  RefMethod method = RefMethod::Adaptive;
  double h = 0.01;        // fixed step, or output step for the adaptive method
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  std::size_t max_steps = 10'000'000;
};

/// Integrates the semi-explicit DAE over local time [0, t_end] from a
/// consistent (x0, y0). Samples at multiples of h and at t_end.
template <class Model>
RefTrajectory integrate_reference(const Model& m, std::vector<double> x, std::vector<double> y, double t_end,
                                  const RefOptions& opt = {}) {
  const std::size_t nx = m.nx(), ny = m.ny();
  std::vector<double> f(nx), g(ny);
  auto rhs = [&](const std::vector<double>& xs, std::vector<double>& ys, double s, std::vector<double>& out) {
    solve_algebraic(m, xs, ys, s);
    out.resize(nx);
    m.eval(xs.data(), ys.data(), s, out.data(), g.data());
  };
  RefTrajectory tr;
  solve_algebraic(m, x, y, 0.0);
  tr.t.push_back(0.0);
  tr.x.push_back(x);
  tr.y.push_back(y);
  const std::size_t nsteps = static_cast<std::size_t>(std::ceil(t_end / opt.h - 1e-9));
  std::vector<double> f0, f1, xp, yp;

  if (opt.method == RefMethod::Adaptive) {
    namespace odeint = boost::numeric::odeint;
    using state = std::vector<double>;
    std::vector<double> ywarm = y;
    auto sys = [&](const state& xs, state& dx, double s) { rhs(xs, ywarm, s, dx); };
    auto stepper = odeint::make_dense_output(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<state>());
    std::vector<double> times;
    for (std::size_t k = 1; k <= nsteps; ++k) times.push_back(std::min(t_end, k * opt.h));
    if (nx == 0) {
      for (double s : times) {
        solve_algebraic(m, x, y, s);
        tr.t.push_back(s);
        tr.x.push_back(x);
        tr.y.push_back(y);
      }
      return tr;
    }
    std::size_t steps = 0;
    auto observer = [&](const state& xs, double s) {
      if (s == 0.0) return;
      if (++steps > opt.max_steps) throw Error(ErrorKind::StepRejectionLimit, "adaptive step limit reached");
      std::vector<double> yy = ywarm;
      solve_algebraic(m, xs, yy, s);
      tr.t.push_back(s);
      tr.x.push_back(xs);
      tr.y.push_back(yy);
    };
    times.insert(times.begin(), 0.0);
    odeint::integrate_times(stepper, sys, x, times.begin(), times.end(), opt.h / 4.0, observer);
    return tr;
  }

  double s = 0.0;
  for (std::size_t k = 1; k <= nsteps; ++k) {
    const double h = std::min(opt.h, t_end - s);
    if (opt.method == RefMethod::ModifiedEuler) {
      rhs(x, y, s, f0);
      xp = x;
      for (std::size_t i = 0; i < nx; ++i) xp[i] += h * f0[i];
      yp = y;
      rhs(xp, yp, s + h, f1);
      for (std::size_t i = 0; i < nx; ++i) x[i] += 0.5 * h * (f0[i] + f1[i]);
      solve_algebraic(m, x, y, s + h);
    } else {
      rhs(x, y, s, f0);
      const double s1 = s + h;
      std::vector<double> xx(nx), yy(ny), ff(nx), gg(ny);
      auto res = [&](const Eigen::VectorXd& z, Eigen::VectorXd& out) {
        for (std::size_t i = 0; i < nx; ++i) xx[i] = z[static_cast<Eigen::Index>(i)];
        for (std::size_t i = 0; i < ny; ++i) yy[i] = z[static_cast<Eigen::Index>(nx + i)];
        m.eval(xx.data(), yy.data(), s1, ff.data(), gg.data());
        out.resize(static_cast<Eigen::Index>(nx + ny));
        for (std::size_t i = 0; i < nx; ++i) out[static_cast<Eigen::Index>(i)] = xx[i] - x[i] - 0.5 * h * (f0[i] + ff[i]);
        for (std::size_t i = 0; i < ny; ++i) out[static_cast<Eigen::Index>(nx + i)] = gg[i];
      };
      Eigen::VectorXd z(static_cast<Eigen::Index>(nx + ny));
      for (std::size_t i = 0; i < nx; ++i) z[static_cast<Eigen::Index>(i)] = x[i] + h * f0[i];
      for (std::size_t i = 0; i < ny; ++i) z[static_cast<Eigen::Index>(nx + i)] = y[i];
      NewtonOptions no;
      no.max_iter = 20;
      newton_fd(res, z, no);
      for (std::size_t i = 0; i < nx; ++i) x[i] = z[static_cast<Eigen::Index>(i)];
      for (std::size_t i = 0; i < ny; ++i) y[i] = z[static_cast<Eigen::Index>(nx + i)];
    }
    s += h;
    tr.t.push_back(s);
    tr.x.push_back(x);
    tr.y.push_back(y);
  }
  return tr;
}

// ---- Interpolation -----------------------------------------------------------

/// Linear interpolation of samples (ts strictly increasing).
inline double interp_linear(const std::vector<double>& ts, const std::vector<double>& vs, double t) {
  if (t <= ts.front()) return vs.front();
  if (t >= ts.back()) return vs.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - ts.begin());
  const double w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
  return vs[k - 1] + w * (vs[k] - vs[k - 1]);
}

/// Cubic Lagrange interpolation through the four samples around t.
inline double interp_cubic(const std::vector<double>& ts, const std::vector<double>& vs, double t) {
  if (ts.size() < 4) return interp_linear(ts, vs, t);
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  std::ptrdiff_t k = (it - ts.begin()) - 2;
  k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(ts.size()) - 4);
  double out = 0.0;
  for (std::ptrdiff_t i = k; i < k + 4; ++i) {
    double w = 1.0;
    for (std::ptrdiff_t j = k; j < k + 4; ++j)
      if (j != i) w *= (t - ts[j]) / (ts[i] - ts[j]);
    out += w * vs[i];
  }
  return out;
}

/// First time the sampled signal reaches `level` from below, located on
/// the interpolant (linear, or cubic refined by bisection).
inline std::optional<double> first_crossing(const std::vector<double>& ts, const std::vector<double>& vs,
                                            double level, bool cubic = false) {
  for (std::size_t k = 1; k < ts.size(); ++k) {
    if (vs[k - 1] < level && vs[k] >= level) {
      if (!cubic) return ts[k - 1] + (level - vs[k - 1]) / (vs[k] - vs[k - 1]) * (ts[k] - ts[k - 1]);
      double lo = ts[k - 1], hi = ts[k];
      for (int it = 0; it < 100 && hi - lo > 1e-14; ++it) {
        const double mid = 0.5 * (lo + hi);
        (interp_cubic(ts, vs, mid) < level ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
  }
  return std::nullopt;
}

}  // namespace hesim
