#pragma once

// Holomorphic-embedding solver for semi-explicit DAEs. A model provides
//   std::size_t nx() const, ny() const;
//   template <class T> void eval(const T* x, const T* y, const T& s, T* f, T* g) const;
// where s is the embedding variable (local time, or alpha - alpha0). The
// recursion produces Maclaurin coefficients in s; every order costs one model
// evaluation and one solve with the factored algebraic Jacobian.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hesim/errors.hpp"
#include "hesim/series.hpp"

namespace hesim {

struct Coefficients {
  std::vector<Series> x;
  std::vector<Series> y;
};

struct GJacobian {
  Eigen::MatrixXd jx;  // dg/dx
  Eigen::MatrixXd jy;  // dg/dy
};

/// Exact Jacobian of g at (x, y, s = s0) by first-order series (dual numbers).
template <class Model>
GJacobian algebraic_jacobian(const Model& m, const std::vector<double>& x, const std::vector<double>& y,
                             double s0 = 0.0) {
  const std::size_t nx = m.nx(), ny = m.ny();
  std::vector<Series> xs, ys, f(nx, Series(2)), g(ny, Series(2));
  for (double v : x) xs.emplace_back(std::vector<double>{v, 0.0});
  for (double v : y) ys.emplace_back(std::vector<double>{v, 0.0});
  const Series s(std::vector<double>{s0, 0.0});
  GJacobian j{Eigen::MatrixXd::Zero(ny, nx), Eigen::MatrixXd::Zero(ny, ny)};
  auto column = [&](Eigen::MatrixXd& out, std::vector<Series>& v, std::size_t c) {
    v[c][1] = 1.0;
    m.eval(xs.data(), ys.data(), s, f.data(), g.data());
    v[c][1] = 0.0;
    for (std::size_t r = 0; r < ny; ++r) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = g[r][1];
  };
  for (std::size_t c = 0; c < nx; ++c) column(j.jx, xs, c);
  for (std::size_t c = 0; c < ny; ++c) column(j.jy, ys, c);
  return j;
}

/// Residuals (f, g) at doubles.
template <class Model>
void eval_double(const Model& m, const std::vector<double>& x, const std::vector<double>& y, double s,
                 std::vector<double>& f, std::vector<double>& g) {
  f.assign(m.nx(), 0.0);
  g.assign(m.ny(), 0.0);
  m.eval(x.data(), y.data(), s, f.data(), g.data());
}

inline double max_abs(const std::vector<double>& v) {
  double r = 0.0;
  for (double e : v) r = std::max(r, std::abs(e));
  return std::isnan(r) ? std::numeric_limits<double>::infinity() : r;
}

inline constexpr double kSingularRcond = 1e-14;

inline Eigen::PartialPivLU<Eigen::MatrixXd> factor_checked(const Eigen::MatrixXd& a) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (a.rows() > 0) {
    const double rc = lu.rcond();
    if (!(rc > kSingularRcond))
      throw Error(ErrorKind::SingularJacobian, "algebraic Jacobian is singular (rcond " + std::to_string(rc) + ")");
  }
  return lu;
}

/// Newton on g(x, y, s0) = 0 over y with x fixed, using the exact Jacobian.
template <class Model>
void newton_polish(const Model& m, const std::vector<double>& x, std::vector<double>& y, double s0 = 0.0,
                   double tol = 1e-13, int max_iter = 8) {
  std::vector<double> f, g;
  for (int it = 0; it < max_iter; ++it) {
    eval_double(m, x, y, s0, f, g);
    if (max_abs(g) <= tol) return;
    const auto j = algebraic_jacobian(m, x, y, s0);
    const auto lu = factor_checked(j.jy);
    const Eigen::VectorXd dy = lu.solve(Eigen::Map<Eigen::VectorXd>(g.data(), g.size()));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= dy[static_cast<Eigen::Index>(i)];
  }
}

/// Maclaurin coefficients of x(s), y(s) to the given order from a consistent
/// anchor (x0, y0).
template <class Model>
Coefficients solve_coefficients(const Model& m, const std::vector<double>& x0, const std::vector<double>& y0,
                                int order, double anchor_tol = 1e-8) {
  const std::size_t nx = m.nx(), ny = m.ny();
  if (x0.size() != nx || y0.size() != ny)
    throw Error(ErrorKind::DimensionMismatch, "anchor size does not match the model");
  std::vector<double> f0, g0;
  eval_double(m, x0, y0, 0.0, f0, g0);
  if (max_abs(g0) > anchor_tol)
    throw Error(ErrorKind::AnchorInconsistent, "algebraic residual at anchor is " + std::to_string(max_abs(g0)));
  const auto jac = algebraic_jacobian(m, x0, y0);
  const auto lu = factor_checked(jac.jy);

  Coefficients c;
  const std::size_t n = static_cast<std::size_t>(order) + 1;
  for (double v : x0) c.x.emplace_back(n, 0.0), c.x.back()[0] = v;
  for (double v : y0) c.y.emplace_back(n, 0.0), c.y.back()[0] = v;

  std::vector<Series> xt(nx, Series(1)), yt(ny, Series(1)), f(nx, Series(1)), g(ny, Series(1));
  Eigen::VectorXd xk(nx), rhs(ny);
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t len = k + 1;
    for (std::size_t i = 0; i < nx; ++i) xt[i] = c.x[i].truncated(len);
    for (std::size_t i = 0; i < ny; ++i) yt[i] = c.y[i].truncated(len);
    for (auto& v : f) v = Series(len);
    for (auto& v : g) v = Series(len);
    m.eval(xt.data(), yt.data(), Series::variable(len, 0.0), f.data(), g.data());
    for (std::size_t i = 0; i < nx; ++i) {
      c.x[i][k] = f[i][k - 1] / static_cast<double>(k);
      xk[static_cast<Eigen::Index>(i)] = c.x[i][k];
    }
    for (std::size_t i = 0; i < ny; ++i) rhs[static_cast<Eigen::Index>(i)] = g[i][k];
    if (nx > 0) rhs += jac.jx * xk;
    const Eigen::VectorXd yk = lu.solve(rhs);
    for (std::size_t i = 0; i < ny; ++i) c.y[i][k] = -yk[static_cast<Eigen::Index>(i)];
  }
  return c;
}

/// Coefficients plus the chosen approximant representation, valid on
/// [0, span].
struct SegmentSolution {
  Coefficients coeffs;
  std::vector<PadeApproximant> xp, yp;
  bool use_pade = false;
  double span = 0.0;

  std::size_t nx() const { return coeffs.x.size(); }
  std::size_t ny() const { return coeffs.y.size(); }

  double x_at(std::size_t i, double s) const { return use_pade ? xp[i](s) : coeffs.x[i](s); }
  double y_at(std::size_t i, double s) const { return use_pade ? yp[i](s) : coeffs.y[i](s); }
  double dx_at(std::size_t i, double s) const {
    return use_pade ? xp[i].derivative(s) : coeffs.x[i].derivative(s);
  }
  void values_at(double s, std::vector<double>& x, std::vector<double>& y) const {
    x.resize(nx());
    y.resize(ny());
    for (std::size_t i = 0; i < nx(); ++i) x[i] = x_at(i, s);
    for (std::size_t i = 0; i < ny(); ++i) y[i] = y_at(i, s);
  }
};

inline std::vector<PadeApproximant> pade_all(const std::vector<Series>& v) {
  std::vector<PadeApproximant> out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(diagonal_pade(s));
  return out;
}

/// Max-norm residual of the governing equations for a representation at s.
template <class Model>
double representation_residual(const Model& m, const SegmentSolution& sol, double s) {
  std::vector<double> x, y, f, g;
  sol.values_at(s, x, y);
  eval_double(m, x, y, s, f, g);
  double r = max_abs(g);
  for (std::size_t i = 0; i < x.size(); ++i) r = std::max(r, std::abs(sol.dx_at(i, s) - f[i]));
  return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
}

struct HeOptions {
  int order = 15;
  double tol = 1e-6;     // residual tolerance for the effective range
  double t_max = 1.0;    // cap on the tested range
  bool allow_pade = true;
  double anchor_tol = 1e-8;
};

/// Coefficients, both representations, and the larger validated range.
template <class Model>
SegmentSolution solve_he(const Model& m, const std::vector<double>& x0, const std::vector<double>& y0,
                         const HeOptions& opt) {
  SegmentSolution sol;
  sol.coeffs = solve_coefficients(m, x0, y0, opt.order, opt.anchor_tol);
  double te_series = -1.0, te_pade = -1.0;
  try {
    te_series = estimate_effective_range([&](double s) { return representation_residual(m, sol, s); }, opt.tol,
                                         opt.t_max);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoValidRange) throw;
  }
  if (opt.allow_pade && te_series < opt.t_max) {
    SegmentSolution p = sol;
    p.xp = pade_all(sol.coeffs.x);
    p.yp = pade_all(sol.coeffs.y);
    p.use_pade = true;
    try {
      te_pade = estimate_effective_range([&](double s) { return representation_residual(m, p, s); }, opt.tol,
                                         opt.t_max);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoValidRange) throw;
    }
    if (te_pade > te_series) {
      p.span = te_pade;
      return p;
    }
  }
  if (te_series <= 0.0) throw Error(ErrorKind::NoValidRange, "no representation meets the residual tolerance");
  sol.span = te_series;
  return sol;
}

struct AlphaResult {
  std::vector<double> y;
  int stages = 0;
};

struct AlphaOptions {
  int order = 20;
  double tol = 1e-10;
  int max_stages = 50;
};

/// Continuation in alpha from 0 to 1. `make(alpha0)` builds the model whose
/// embedding variable is alpha - alpha0. When the validated range falls short
/// of the remaining distance the solve re-anchors at the end of that range.
/// Every stage Newton-polishes its anchor before expanding.
template <class MakeModel>
AlphaResult solve_alpha(const MakeModel& make, std::vector<double> y0, const AlphaOptions& opt) {
  double a0 = 0.0;
  const std::vector<double> none;
  for (int stage = 1; stage <= opt.max_stages; ++stage) {
    const auto m = make(a0);
    newton_polish(m, none, y0);
    HeOptions ho;
    ho.order = opt.order;
    ho.tol = opt.tol;
    ho.t_max = 1.0 - a0;
    SegmentSolution sol;
    try {
      sol = solve_he(m, none, y0, ho);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NoValidRange)
        throw Error(ErrorKind::NoConvergenceAtAlpha1, "switching solve stalls at alpha = " + std::to_string(a0));
      throw;
    }
    std::vector<double> x;
    sol.values_at(sol.span, x, y0);
    if (sol.span >= ho.t_max * (1.0 - 1e-12)) return {y0, stage};
    a0 += sol.span;
  }
  throw Error(ErrorKind::NoConvergenceAtAlpha1, "switching solve did not reach alpha = 1");
}

}  // namespace hesim
