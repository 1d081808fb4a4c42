#pragma once

// Truncated power series and Padé approximants: the representation of every
// analytic segment produced by the solver.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hesim/errors.hpp"

namespace hesim {

/// Coefficients x[0..N] of x(s) = sum_k x[k] s^k.
///
/// Arithmetic between two series requires equal length; the result is
/// truncated at the same order. Mixed series/double arithmetic treats the
/// double as a constant series.
class Series {
 public:
  Series() = default;
  explicit Series(std::size_t len, double c0 = 0.0) : c_(len, 0.0) {
    if (len > 0) c_[0] = c0;
  }
  Series(std::initializer_list<double> c) : c_(c) {}
  explicit Series(std::vector<double> c) : c_(std::move(c)) {}

  /// c0 + s, the embedding variable itself.
  static Series variable(std::size_t len, double c0 = 0.0) {
    Series s(len, c0);
    if (len > 1) s.c_[1] = 1.0;
    return s;
  }

  std::size_t size() const noexcept { return c_.size(); }
  int order() const noexcept { return static_cast<int>(c_.size()) - 1; }
  bool empty() const noexcept { return c_.empty(); }

  double operator[](std::size_t k) const { return c_[k]; }
  double& operator[](std::size_t k) { return c_[k]; }
  const std::vector<double>& coeffs() const noexcept { return c_; }
  std::vector<double>& coeffs() noexcept { return c_; }

  Series truncated(std::size_t len) const {
    Series r(len);
    std::copy_n(c_.begin(), std::min(len, c_.size()), r.c_.begin());
    return r;
  }

  /// Horner evaluation.
  double operator()(double t) const {
    double v = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) v = v * t + *it;
    return v;
  }

  /// d/ds evaluated at t.
  double derivative(double t) const {
    double v = 0.0;
    for (std::size_t k = c_.size(); k-- > 1;) v = v * t + static_cast<double>(k) * c_[k];
    return v;
  }

  Series& operator+=(const Series& o) {
    assert(o.size() == size());
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  Series& operator-=(const Series& o) {
    assert(o.size() == size());
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Series& operator+=(double v) {
    if (!c_.empty()) c_[0] += v;
    return *this;
  }
  Series& operator-=(double v) {
    if (!c_.empty()) c_[0] -= v;
    return *this;
  }
  Series& operator*=(double v) {
    for (auto& x : c_) x *= v;
    return *this;
  }
  Series& operator/=(double v) {
    for (auto& x : c_) x /= v;
    return *this;
  }

  friend bool operator==(const Series&, const Series&) = default;

 private:
  std::vector<double> c_;
};

using TruncatedSeries = Series;

/// Cauchy product truncated at order n: result[k] = sum_j a[j] b[k-j].
inline Series series_mul(const Series& a, const Series& b, int n) {
  Series r(static_cast<std::size_t>(n + 1));
  const int na = a.order(), nb = b.order();
  for (int k = 0; k <= n; ++k) {
    double acc = 0.0;
    const int jlo = std::max(0, k - nb), jhi = std::min(k, na);
    for (int j = jlo; j <= jhi; ++j) acc += a[j] * b[k - j];
    r[k] = acc;
  }
  return r;
}

inline constexpr double kZeroLeadTol = 1e-14;

/// 1/a through order n, solved order by order from a*w = 1.
inline Series series_reciprocal(const Series& a, int n) {
  if (a.empty() || std::abs(a[0]) < kZeroLeadTol)
    throw Error(ErrorKind::ZeroLeadingCoefficient, "reciprocal of a series with vanishing constant term");
  Series w(static_cast<std::size_t>(n + 1));
  const int na = a.order();
  w[0] = 1.0 / a[0];
  for (int k = 1; k <= n; ++k) {
    double acc = 0.0;
    for (int j = 1; j <= std::min(k, na); ++j) acc += a[j] * w[k - j];
    w[k] = -acc * w[0];
  }
  return w;
}

inline Series operator+(Series a, const Series& b) { return a += b; }
inline Series operator-(Series a, const Series& b) { return a -= b; }
inline Series operator+(Series a, double b) { return a += b; }
inline Series operator+(double b, Series a) { return a += b; }
inline Series operator-(Series a, double b) { return a -= b; }
inline Series operator-(double b, Series a) {
  a *= -1.0;
  return a += b;
}
inline Series operator-(Series a) {
  a *= -1.0;
  return a;
}
inline Series operator*(Series a, double b) { return a *= b; }
inline Series operator*(double b, Series a) { return a *= b; }
inline Series operator/(Series a, double b) { return a /= b; }

inline Series operator*(const Series& a, const Series& b) {
  assert(a.size() == b.size());
  return series_mul(a, b, a.order());
}

inline Series operator/(const Series& a, const Series& b) {
  assert(a.size() == b.size());
  if (std::abs(b[0]) < kZeroLeadTol)
    throw Error(ErrorKind::ZeroLeadingCoefficient, "division by a series with vanishing constant term");
  const std::size_t n = a.size();
  Series q(n);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = a[k];
    for (std::size_t j = 1; j <= k; ++j) acc -= b[j] * q[k - j];
    q[k] = acc / b[0];
  }
  return q;
}

inline Series operator/(double a, const Series& b) { return Series(b.size(), a) / b; }

inline Series sqrt(const Series& a) {
  if (a.empty() || a[0] <= 0.0)
    throw Error(ErrorKind::ZeroLeadingCoefficient, "square root of a series with nonpositive constant term");
  const std::size_t n = a.size();
  Series r(n);
  r[0] = std::sqrt(a[0]);
  for (std::size_t k = 1; k < n; ++k) {
    double acc = a[k];
    for (std::size_t j = 1; j < k; ++j) acc -= r[j] * r[k - j];
    r[k] = acc / (2.0 * r[0]);
  }
  return r;
}

/// sin and cos of a series, carried jointly through the closure
/// (sin u)' = cos(u) u', (cos u)' = -sin(u) u'.
inline std::pair<Series, Series> sincos(const Series& u) {
  const std::size_t n = u.size();
  Series s(n), c(n);
  if (n == 0) return {s, c};
  s[0] = std::sin(u[0]);
  c[0] = std::cos(u[0]);
  for (std::size_t k = 1; k < n; ++k) {
    double as = 0.0, ac = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
      const double ju = static_cast<double>(j) * u[j];
      as += ju * c[k - j];
      ac -= ju * s[k - j];
    }
    s[k] = as / static_cast<double>(k);
    c[k] = ac / static_cast<double>(k);
  }
  return {s, c};
}

inline double sqrt(double v) { return std::sqrt(v); }
inline std::pair<double, double> sincos(double u) { return {std::sin(u), std::cos(u)}; }

/// Coefficients of p(c + s) given those of p(s).
inline std::vector<double> taylor_shift(std::vector<double> p, double c) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = n - 1; j > i; --j) p[j - 1] += c * p[j];
  return p;
}

/// num(t)/den(t) with den[0] == 1.
struct PadeApproximant {
  std::vector<double> num{0.0};
  std::vector<double> den{1.0};

  int num_order() const { return static_cast<int>(num.size()) - 1; }
  int den_order() const { return static_cast<int>(den.size()) - 1; }

  static double horner(const std::vector<double>& p, double t) {
    double v = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * t + *it;
    return v;
  }
  static double horner_d(const std::vector<double>& p, double t) {
    double v = 0.0;
    for (std::size_t k = p.size(); k-- > 1;) v = v * t + static_cast<double>(k) * p[k];
    return v;
  }

  double operator()(double t) const {
    const double b = horner(den, t);
    if (std::abs(b) < 1e-300 || !std::isfinite(b))
      throw Error(ErrorKind::DenominatorZero, "Padé denominator vanishes at t=" + std::to_string(t));
    return horner(num, t) / b;
  }

  double derivative(double t) const {
    const double a = horner(num, t), b = horner(den, t);
    if (std::abs(b) < 1e-300 || !std::isfinite(b))
      throw Error(ErrorKind::DenominatorZero, "Padé denominator vanishes at t=" + std::to_string(t));
    return (horner_d(num, t) * b - a * horner_d(den, t)) / (b * b);
  }

  /// Taylor re-expansion num/den through order n.
  Series to_series(int n) const {
    Series a(std::vector<double>(num.begin(), num.end()));
    Series b(std::vector<double>(den.begin(), den.end()));
    Series an = a.truncated(static_cast<std::size_t>(n + 1));
    Series bn = b.truncated(static_cast<std::size_t>(n + 1));
    return an / bn;
  }
};

namespace detail {

inline constexpr double kPadeCondLimit = 1e13;

// Power-of-two scale sigma so that c[k] sigma^k stays O(1); Padé of the
// scaled series is mapped back exactly.
inline double pade_scale(const std::vector<double>& c) {
  double cmax = 0.0;
  for (double v : c) cmax = std::max(cmax, std::abs(v));
  if (cmax == 0.0) return 1.0;
  double rho = 0.0;
  for (std::size_t k = 1; k < c.size(); ++k) {
    const double r = std::abs(c[k]) / cmax;
    if (r > 0.0) rho = std::max(rho, std::pow(r, 1.0 / static_cast<double>(k)));
  }
  if (rho == 0.0) return 1.0;
  return std::exp2(std::round(-std::log2(rho)));
}

}  // namespace detail

/// [n_num/n_den] Padé approximant of a, normalized so den[0] = 1.
/// Throws SingularPade when the denominator system is numerically singular.
inline PadeApproximant pade_from_series(const Series& a, int n_num, int n_den) {
  if (n_num < 0 || n_den < 0 || n_num + n_den > a.order())
    throw Error(ErrorKind::DimensionMismatch, "Padé orders exceed series order");
  PadeApproximant p;
  if (n_den == 0) {
    p.num.assign(a.coeffs().begin(), a.coeffs().begin() + n_num + 1);
    p.den = {1.0};
    return p;
  }
  const int n = n_num + n_den;
  std::vector<double> c(a.coeffs().begin(), a.coeffs().begin() + n + 1);
  double cmax = 0.0;
  for (double v : c) cmax = std::max(cmax, std::abs(v));
  if (cmax == 0.0) throw Error(ErrorKind::SingularPade, "zero series");
  const double sigma = detail::pade_scale(c);
  double sp = 1.0;
  for (auto& v : c) {
    v = v / cmax * sp;
    sp *= sigma;
  }
  auto coef = [&](int k) { return k < 0 ? 0.0 : c[static_cast<std::size_t>(k)]; };

  Eigen::MatrixXd m(n_den, n_den);
  Eigen::VectorXd rhs(n_den);
  for (int i = 1; i <= n_den; ++i) {
    for (int j = 1; j <= n_den; ++j) m(i - 1, j - 1) = coef(n_num + i - j);
    rhs(i - 1) = -coef(n_num + i);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(0) == 0.0 || sv(n_den - 1) * detail::kPadeCondLimit < sv(0))
    throw Error(ErrorKind::SingularPade, "Toeplitz system is singular");
  Eigen::VectorXd b = svd.solve(rhs);
  if (!b.allFinite()) throw Error(ErrorKind::SingularPade, "non-finite denominator");

  std::vector<double> den(static_cast<std::size_t>(n_den + 1)), num(static_cast<std::size_t>(n_num + 1));
  den[0] = 1.0;
  for (int j = 1; j <= n_den; ++j) den[j] = b(j - 1);
  for (int i = 0; i <= n_num; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= std::min(i, n_den); ++j) acc += den[j] * coef(i - j);
    num[i] = acc;
  }
  // Undo the scaling: t = sigma u.
  double inv = 1.0;
  for (int k = 0; k <= n_den; ++k, inv /= sigma) den[k] *= inv;
  inv = 1.0;
  for (int k = 0; k <= n_num; ++k, inv /= sigma) num[k] *= inv * cmax;
  num[0] = a[0];
  p.num = std::move(num);
  p.den = std::move(den);
  return p;
}

/// Reduces the denominator order until the Toeplitz system is solvable; at
/// denominator order 0 the result is the truncated series itself.
inline PadeApproximant pade_with_fallback(const Series& a, int n_num, int n_den) {
  for (int m = n_den; m > 0; --m) {
    try {
      return pade_from_series(a, n_num, m);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SingularPade) throw;
    }
  }
  return pade_from_series(a, std::min(a.order(), n_num + n_den), 0);
}

/// Diagonal approximant of a series of order N.
inline PadeApproximant diagonal_pade(const Series& a) {
  const int h = a.order() / 2;
  return pade_with_fallback(a, a.order() - h, h);
}

inline double eval(const Series& s, double t) { return s(t); }
inline double eval(const PadeApproximant& p, double t) { return p(t); }

inline constexpr int kProbeCount = 8;

/// Chebyshev-Lobatto points in (0, T], ending at T.
inline std::array<double, kProbeCount> probe_points(double T) {
  std::array<double, kProbeCount> p{};
  for (int i = 1; i <= kProbeCount; ++i)
    p[i - 1] = 0.5 * T * (1.0 - std::cos(std::numbers::pi * i / kProbeCount));
  return p;
}

/// Largest tested T_e <= t_max whose probe residuals stay within tol.
///
/// `residual_at(t)` returns the max-norm residual of the governing equations
/// at t; non-finite values and DenominatorZero count as failures. The search
/// halves from t_max until the probes pass, then grows by 1.25 up to (but
/// excluding) the last failing length.
inline double estimate_effective_range(const std::function<double(double)>& residual_at, double tol,
                                       double t_max) {
  auto passes = [&](double T) {
    for (double t : probe_points(T)) {
      double r;
      try {
        r = residual_at(t);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::DenominatorZero || e.kind() == ErrorKind::ZeroLeadingCoefficient)
          return false;
        throw;
      }
      if (!(r <= tol)) return false;
    }
    return true;
  };
  const double floor = t_max * std::exp2(-20.0);
  double T = t_max;
  double failing = std::numeric_limits<double>::infinity();
  while (!passes(T)) {
    failing = T;
    T *= 0.5;
    if (T < floor) throw Error(ErrorKind::NoValidRange, "residual exceeds tolerance on every tested range");
  }
  if (T < t_max) {
    for (;;) {
      const double next = std::min(T * 1.25, failing);
      if (next >= failing || !passes(next)) break;
      T = next;
    }
  }
  return T;
}

}  // namespace hesim
