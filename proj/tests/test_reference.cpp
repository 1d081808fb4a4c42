#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "hesim/reference.hpp"

using namespace hesim;

namespace {

// Upper root of |V|^4 + (2 lam (Pr+Qx) - E^2)|V|^2 + lam^2 |S|^2 |z|^2 = 0,
// then |I|^2 = |S lam|^2 / |V|^2.
double current_sq_from_voltage(const TwoBusCase& c, double t) {
  const double lam = c.rate * t;
  const double bq = 2 * lam * (c.p * c.r + c.q * c.x) - c.e * c.e;
  const double cq = lam * lam * (c.p * c.p + c.q * c.q) * (c.r * c.r + c.x * c.x);
  const double u = (-bq + std::sqrt(bq * bq - 4 * cq)) / 2;
  return lam * lam * (c.p * c.p + c.q * c.q) / u;
}

// ODE with known solution for integrator order checks: x' = -x + y, 0 = y - sin(s).
struct Forced {
  std::size_t nx() const { return 1; }
  std::size_t ny() const { return 1; }
  void eval(const double* x, const double* y, double s, double* f, double* g) const {
    f[0] = -x[0] + y[0];
    g[0] = y[0] - std::sin(s);
  }
};

double forced_exact(double t) { return 1.5 * std::exp(-t) + 0.5 * (std::sin(t) - std::cos(t)); }

double final_error(RefMethod m, double h) {
  RefOptions o;
  o.method = m;
  o.h = h;
  const auto tr = integrate_reference(Forced{}, {1.0}, {0.0}, 2.0, o);
  return std::abs(tr.x.back()[0] - forced_exact(2.0));
}

}  // namespace

TEST(TwoBus, CurrentStartsAtZero) { EXPECT_DOUBLE_EQ(two_bus_current_sq(TwoBusCase{}, 0.0), 0.0); }

TEST(TwoBus, CurrentMatchesVoltageSolution) {
  TwoBusCase c;
  const double tc = two_bus_collapse_time(c);
  for (int k = 1; k < 50; ++k) {
    const double t = tc * k / 50.0;
    EXPECT_NEAR(two_bus_current_sq(c, t), current_sq_from_voltage(c, t), 1e-9 * (1 + current_sq_from_voltage(c, t)));
  }
}

TEST(TwoBus, CurrentPastCollapseThrows) {
  TwoBusCase c;
  try {
    two_bus_current_sq(c, two_bus_collapse_time(c) * 1.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PastCollapse);
  }
}

TEST(TwoBus, EventTimeInvertsCurrent) {
  TwoBusCase c;
  const double tc = two_bus_collapse_time(c);
  for (double frac : {0.1, 0.4, 0.8}) {
    const double t = frac * tc;
    c.i_th = std::sqrt(two_bus_current_sq(c, t));
    EXPECT_NEAR(two_bus_event_time(c), t, 1e-10);
  }
}

TEST(TwoBus, ThresholdAboveNoseUnreachable) {
  TwoBusCase c;
  c.i_th = 100.0;
  try {
    two_bus_event_time(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Unreachable);
  }
}

TEST(Integrators, ModifiedEulerIsSecondOrder) {
  const double p = std::log2(final_error(RefMethod::ModifiedEuler, 0.02) / final_error(RefMethod::ModifiedEuler, 0.01));
  EXPECT_NEAR(p, 2.0, 0.1);
}

TEST(Integrators, TrapezoidalIsSecondOrder) {
  const double p = std::log2(final_error(RefMethod::Trapezoidal, 0.02) / final_error(RefMethod::Trapezoidal, 0.01));
  EXPECT_NEAR(p, 2.0, 0.1);
}

TEST(Integrators, AdaptiveIsTight) {
  EXPECT_LT(final_error(RefMethod::Adaptive, 0.1), 1e-9);
  RefOptions o;
  o.h = 0.25;
  const auto tr = integrate_reference(Forced{}, {1.0}, {0.0}, 2.0, o);
  ASSERT_EQ(tr.t.size(), 9u);
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    EXPECT_NEAR(tr.x[k][0], forced_exact(tr.t[k]), 1e-9);
    EXPECT_NEAR(tr.y[k][0], std::sin(tr.t[k]), 1e-11);
  }
}

TEST(Newton, SolvesAlgebraicPart) {
  std::vector<double> y{5.0};
  solve_algebraic(Forced{}, {0.0}, y, 0.7);
  EXPECT_NEAR(y[0], std::sin(0.7), 1e-13);
}

TEST(Interpolation, CubicExactOnCubics) {
  std::vector<double> ts, vs;
  for (int k = 0; k < 10; ++k) {
    ts.push_back(0.3 * k);
    vs.push_back(std::pow(0.3 * k, 3) - 2 * 0.3 * k);
  }
  for (double t : {0.05, 0.71, 1.5, 2.69}) {
    EXPECT_NEAR(interp_cubic(ts, vs, t), t * t * t - 2 * t, 1e-12);
    EXPECT_NEAR(interp_linear(ts, vs, 0.45), 0.5 * (vs[1] + vs[2]), 1e-15);
  }
}

TEST(Interpolation, CrossingLocation) {
  std::vector<double> ts{0, 1, 2, 3, 4}, vs;
  for (double t : ts) vs.push_back(t * t);
  EXPECT_NEAR(*first_crossing(ts, vs, 5.0), 2.0 + 1.0 / 5.0, 1e-14);
  EXPECT_NEAR(*first_crossing(ts, vs, 5.0, true), std::sqrt(5.0), 1e-12);
  EXPECT_FALSE(first_crossing(ts, vs, 50.0).has_value());
}

TEST(TwoBus, ZeroThresholdCrossedAtStart) {
  TwoBusCase c;
  c.i_th = 0.0;
  EXPECT_EQ(two_bus_event_time(c), 0.0);
}

TEST(TwoBus, EventTimeScalesInverselyWithLoad) {
  // lambda enters only through lambda (P, Q), so doubling the load halves t_th.
  TwoBusCase c;
  c.i_th = 2.0;
  const double t1 = two_bus_event_time(c);
  for (double k : {0.5, 2.0, 3.0}) {
    TwoBusCase s = c;
    s.p *= k;
    s.q *= k;
    EXPECT_NEAR(two_bus_event_time(s), t1 / k, 1e-12 * t1);
  }
}

TEST(TwoBus, EventTimeMatchesBisectionOnCurrent) {
  TwoBusCase c;
  c.i_th = 5.0;
  double lo = 0.0, hi = two_bus_collapse_time(c);
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (two_bus_current_sq(c, mid) < c.i_th * c.i_th ? lo : hi) = mid;
  }
  EXPECT_NEAR(two_bus_event_time(c), 0.5 * (lo + hi), 1e-10);
}
