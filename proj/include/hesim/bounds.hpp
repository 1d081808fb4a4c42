#pragma once

// Interval-Horner polynomial bounds and the rate-of-change criteria that
// authorize switching a segment from the full dynamic model to QSS.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hesim/errors.hpp"
#include "hesim/series.hpp"

namespace hesim {

struct PolyBounds {
  double lower;
  double upper;
};

/// Bounds of x(t) = sum x[k] t^k over t in [0, T], by interval arithmetic on
/// the nested Horner form with outward rounding. O(N).
inline PolyBounds poly_bounds(std::span<const double> x, double T) {
  if (x.empty()) return {0.0, 0.0};
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = x.size() - 1;
  double ub = x[n], lb = x[n];
  for (std::size_t k = n; k-- > 0;) {
    ub = ub < 0.0 ? x[k] : std::nextafter(std::nextafter(ub * T, inf) + x[k], inf);
    lb = lb > 0.0 ? x[k] : std::nextafter(std::nextafter(lb * T, -inf) + x[k], -inf);
  }
  return {lb, ub};
}

enum class RateSource { PS, PA, PA_undefined };

inline const char* to_string(RateSource s) {
  switch (s) {
    case RateSource::PS: return "PS";
    case RateSource::PA: return "PA";
    case RateSource::PA_undefined: return "PA_undefined";
  }
  return "?";
}

/// Bounds on the average rate of change (x(t) - x(0)) / t over (0, T_e].
struct RateBound {
  double lower = 0.0;
  double upper = 0.0;
  double delta = 0.0;
  RateSource source = RateSource::PS;

  bool defined() const { return source != RateSource::PA_undefined; }
};

inline RateBound make_rate_bound(double lo, double hi, RateSource src) {
  return {lo, hi, std::max(std::abs(lo), std::abs(hi)), src};
}

/// Power-series criterion: bounds of sum_{k>=1} x[k] t^{k-1}.
inline RateBound ps_rate_bound(const Series& s, double Te) {
  if (s.order() < 1) return make_rate_bound(0.0, 0.0, RateSource::PS);
  std::span<const double> tail(s.coeffs().data() + 1, s.size() - 1);
  const auto b = poly_bounds(tail, Te);
  return make_rate_bound(b.lower, b.upper, RateSource::PS);
}

/// Padé criterion. With c = num[0] and x~A[k] = num[k] - c den[k] (both padded
/// to a common order), R(t) = (sum_{k>=1} x~A[k] t^{k-1}) / den(t). Undefined
/// when the interval lower bound of den is not positive.
inline RateBound pa_rate_bound(const PadeApproximant& p, double Te) {
  const std::size_t n = std::max(p.num.size(), p.den.size());
  std::vector<double> a(p.num), b(p.den);
  a.resize(n, 0.0);
  b.resize(n, 0.0);
  const double c = a[0] / b[0];
  std::vector<double> tilde(n > 1 ? n - 1 : 0);
  for (std::size_t k = 1; k < n; ++k) tilde[k - 1] = a[k] - c * b[k];
  const auto den = poly_bounds(b, Te);
  if (!(den.lower > 0.0)) return {0.0, 0.0, 0.0, RateSource::PA_undefined};
  if (tilde.empty()) return make_rate_bound(0.0, 0.0, RateSource::PA);
  const auto nb = poly_bounds(tilde, Te);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double hi = std::nextafter(nb.upper / (nb.upper >= 0.0 ? den.lower : den.upper), inf);
  const double lo = std::nextafter(nb.lower / (nb.lower <= 0.0 ? den.lower : den.upper), -inf);
  return make_rate_bound(lo, hi, RateSource::PA);
}

enum class Criterion { None, PS, PA, Both };

inline const char* to_string(Criterion c) {
  switch (c) {
    case Criterion::None: return "none";
    case Criterion::PS: return "PS";
    case Criterion::PA: return "PA";
    case Criterion::Both: return "both";
  }
  return "?";
}

struct VariableVerdict {
  double delta_ps = 0.0;
  std::optional<double> delta_pa;  // empty when the PA bound is undefined
  bool is_steady = false;
  Criterion decided_by = Criterion::None;
};

/// A variable is steady when either defined delta is below eps_t.
inline VariableVerdict classify(double delta_ps, std::optional<double> delta_pa, double eps_t) {
  VariableVerdict v;
  v.delta_ps = delta_ps;
  v.delta_pa = delta_pa;
  const bool ps = delta_ps < eps_t;
  const bool pa = delta_pa && *delta_pa < eps_t;
  v.is_steady = ps || pa;
  v.decided_by = ps && pa ? Criterion::Both : ps ? Criterion::PS : pa ? Criterion::PA : Criterion::None;
  return v;
}

struct SteadyStateVerdict {
  std::map<std::string, VariableVerdict> variables;
  bool system_steady = false;
  double threshold = 1e-3;
};

struct MonitoredVariable {
  Series series;
  PadeApproximant pade;
  bool is_rotor_angle = false;
};

inline SteadyStateVerdict verdict_from(std::map<std::string, VariableVerdict> vars, double eps_t) {
  SteadyStateVerdict out;
  out.threshold = eps_t;
  out.system_steady = true;
  for (const auto& [name, v] : vars) out.system_steady = out.system_steady && v.is_steady;
  out.variables = std::move(vars);
  return out;
}

/// Evaluates both criteria for every monitored variable over [0, Te]. When
/// `angle_reference` names a rotor-angle variable, every rotor angle is
/// replaced by its difference to the reference before bounding (the
/// reference itself is then identically zero and omitted).
inline SteadyStateVerdict steady_state_check(const std::map<std::string, MonitoredVariable>& variables, double Te,
                                             double eps_t,
                                             const std::optional<std::string>& angle_reference = std::nullopt) {
  if (variables.empty()) throw Error(ErrorKind::EmptyVariableSet, "no monitored variables");
  const MonitoredVariable* ref = nullptr;
  if (angle_reference) {
    auto it = variables.find(*angle_reference);
    if (it == variables.end())
      throw Error(ErrorKind::DimensionMismatch, "unknown angle reference " + *angle_reference);
    ref = &it->second;
  }
  std::map<std::string, VariableVerdict> out;
  for (const auto& [name, mv] : variables) {
    Series s = mv.series;
    PadeApproximant p = mv.pade;
    if (ref && mv.is_rotor_angle) {
      if (&mv == ref) continue;
      s = mv.series - ref->series;
      p = diagonal_pade(s);
    }
    const auto ps = ps_rate_bound(s, Te);
    const auto pa = pa_rate_bound(p, Te);
    out[name] = classify(ps.delta, pa.defined() ? std::optional<double>(pa.delta) : std::nullopt, eps_t);
  }
  if (out.empty()) throw Error(ErrorKind::EmptyVariableSet, "only the reference angle was monitored");
  return verdict_from(std::move(out), eps_t);
}

}  // namespace hesim
