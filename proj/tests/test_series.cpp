#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hesim/series.hpp"

using namespace hesim;

namespace {

double factorial(int k) { return std::tgamma(k + 1.0); }

Series exp_series(std::size_t len) {
  Series s(len);
  for (std::size_t k = 0; k < len; ++k) s[k] = 1.0 / factorial(static_cast<int>(k));
  return s;
}

}  // namespace

TEST(Series, HornerEvaluation) {
  Series p{1.0, -2.0, 3.0};
  EXPECT_DOUBLE_EQ(p(2.0), 1.0 - 4.0 + 12.0);
  EXPECT_DOUBLE_EQ(p.derivative(2.0), -2.0 + 12.0);
}

TEST(Series, ReciprocalOfOnePlusT) {
  Series a{1.0, 1.0, 0.0, 0.0};
  Series r = series_reciprocal(a, 3);
  EXPECT_EQ(r, (Series{1.0, -1.0, 1.0, -1.0}));
}

TEST(Series, ReciprocalRejectsZeroLead) {
  Series a{0.0, 1.0};
  try {
    series_reciprocal(a, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroLeadingCoefficient);
  }
}

TEST(Series, ProductTruncates) {
  Series a{1.0, 2.0, 0.0};
  Series b{3.0, 0.0, 1.0};
  Series c = a * b;
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c, (Series{3.0, 6.0, 1.0}));
}

TEST(Series, SqrtSquaresBack) {
  Series a{4.0, 1.0, -0.5, 0.25, 0.1, 0.0};
  Series r = sqrt(a);
  Series back = r * r;
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(back[k], a[k], 1e-14);
}

TEST(Series, SinCosMatchTaylor) {
  // sin(t) and cos(t) around 0.3: compare against direct evaluation.
  Series u = Series::variable(16, 0.3);
  auto [s, c] = sincos(u);
  for (double t : {0.0, 0.1, 0.5}) {
    EXPECT_NEAR(s(t), std::sin(0.3 + t), 1e-13);
    EXPECT_NEAR(c(t), std::cos(0.3 + t), 1e-13);
  }
}

TEST(Series, DivisionInvertsProduct) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Series a(8), b(8);
    for (std::size_t k = 0; k < 8; ++k) {
      a[k] = d(rng);
      b[k] = d(rng);
    }
    b[0] = 1.5 + std::abs(b[0]);
    Series q = a / b;
    Series back = q * b;
    for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(back[k], a[k], 1e-12);
  }
}

TEST(Series, TaylorShiftRecentres) {
  std::vector<double> p{1.0, 2.0, 3.0, 4.0};
  auto q = taylor_shift(p, 0.5);
  Series ps(p), qs(q);
  for (double t : {-0.3, 0.0, 0.2, 1.0}) EXPECT_NEAR(qs(t), ps(t + 0.5), 1e-13);
}

TEST(Pade, GeometricSeriesIsExact) {
  Series a(6);
  for (std::size_t k = 0; k < 6; ++k) a[k] = 1.0;
  auto p = pade_from_series(a, 1, 1);
  ASSERT_EQ(p.num.size(), 2u);
  ASSERT_EQ(p.den.size(), 2u);
  EXPECT_NEAR(p.num[0], 1.0, 1e-14);
  EXPECT_NEAR(p.num[1], 0.0, 1e-14);
  EXPECT_NEAR(p.den[0], 1.0, 1e-14);
  EXPECT_NEAR(p.den[1], -1.0, 1e-14);
}

TEST(Pade, ReciprocalOfOnePlusT) {
  // [2/2] is degenerate for an exact [0/1] function; the ladder recovers it.
  Series a{1.0, -1.0, 1.0, -1.0, 1.0};
  auto p = pade_with_fallback(a, 2, 2);
  EXPECT_NEAR(p(0.5), 2.0 / 3.0, 1e-13);
}

TEST(Pade, ExpReexpansionMatches) {
  Series a = exp_series(5);
  auto p = pade_from_series(a, 2, 2);
  Series back = p.to_series(4);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(back[k], a[k], 1e-12);
  // Classical [2/2]: (1 + t/2 + t^2/12) / (1 - t/2 + t^2/12).
  EXPECT_NEAR(p.num[1] / p.num[0], 0.5, 1e-12);
  EXPECT_NEAR(p.den[2] / p.den[0], 1.0 / 12.0, 1e-12);
}

TEST(Pade, ExtendsBeyondRadius) {
  // log(1+t) has radius 1; the diagonal approximant stays accurate at t = 2.
  Series a(21);
  for (int k = 1; k < 21; ++k) a[k] = (k % 2 ? 1.0 : -1.0) / k;
  auto p = diagonal_pade(a);
  EXPECT_NEAR(p(2.0), std::log(3.0), 1e-6);
  EXPECT_GT(std::abs(a(2.0) - std::log(3.0)), 1.0);
}

TEST(Pade, SingularSystemFallsBack) {
  Series a{1.0, 0.0, 0.0, 0.0, 0.0};
  auto p = pade_with_fallback(a, 2, 2);
  EXPECT_NEAR(p(0.7), 1.0, 1e-14);
}

TEST(Pade, DenominatorZeroIsReported) {
  PadeApproximant p{{1.0}, {1.0, -1.0}};
  try {
    p(1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DenominatorZero);
  }
}

TEST(EffectiveRange, ConvergesBelowFirstFailure) {
  // Residual grows as t^4; tol 1e-4 admits t up to 0.1.
  auto res = [](double t) { return t * t * t * t; };
  double T = estimate_effective_range(res, 1e-4, 1.0);
  EXPECT_LE(T, 0.1 + 1e-12);
  EXPECT_GT(T, 0.1 / 1.25 - 1e-12);
}

TEST(EffectiveRange, FullRangeWhenResidualSmall) {
  EXPECT_DOUBLE_EQ(estimate_effective_range([](double) { return 0.0; }, 1e-6, 3.0), 3.0);
}

TEST(EffectiveRange, NoValidRange) {
  try {
    estimate_effective_range([](double) { return 1.0; }, 1e-6, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoValidRange);
  }
}
