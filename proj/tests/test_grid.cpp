#include <gtest/gtest.h>

#include "hesim/powerflow.hpp"

using namespace hesim;

namespace {

GridCase three_bus() {
  GridCase c;
  c.name = "three";
  c.buses = {{1, 230, 1.0, 0.0}, {2, 230, 1.0, 0.0}, {3, 230, 1.0, 0.0}};
  c.branches = {{1, 1, 2, 0.01, 0.1, 0.02}, {2, 2, 3, 0.02, 0.12, 0.02, 1.05}, {3, 1, 3, 0.01, 0.15, 0.0}};
  Generator g1;
  g1.id = 1;
  g1.bus = 1;
  g1.p0 = 0.0;
  g1.vset = 1.03;
  Generator g2 = g1;
  g2.id = 2;
  g2.bus = 3;
  g2.p0 = 0.6;
  g2.vset = 1.01;
  c.gens = {g1, g2};
  Load l;
  l.id = 1;
  l.bus = 2;
  l.p = 1.2;
  l.q = 0.4;
  l.fz = 0.3;
  l.fi = 0.2;
  l.fp = 0.5;
  l.motor.share = 0.3;
  c.loads = {l};
  return c;
}

// Independent polar Newton-Raphson with a finite-difference Jacobian;
// unknowns are angles of buses 2,3 and magnitude of bus 2.
std::vector<cplx> newton_pf(const GridCase& c, const std::vector<cplx>& motor_s, double q_static) {
  const auto y = build_admittance(c, branch_status(c));
  const auto& ld = c.loads[0];
  auto mismatch = [&](const Eigen::Vector3d& z) {
    std::vector<cplx> v{std::polar(1.03, 0.0), std::polar(z[2], z[0]), std::polar(1.01, z[1])};
    Eigen::Vector3d r;
    auto s_inj = [&](int i) {
      cplx inet = 0;
      for (int j = 0; j < 3; ++j) inet += y(i, j) * v[j];
      return v[i] * std::conj(inet);
    };
    const double m = std::abs(v[1]);
    const cplx sload = cplx(ld.p * (1 - ld.motor.share), q_static) * (ld.fz * m * m + ld.fi * m + ld.fp) + motor_s[0];
    const cplx s2 = s_inj(1) + sload;
    const cplx s3 = s_inj(2);
    r << s2.real(), s2.imag(), s3.real() - 0.6;
    return r;
  };
  Eigen::Vector3d z(0.0, 0.0, 1.0);
  for (int it = 0; it < 30; ++it) {
    Eigen::Vector3d r = mismatch(z);
    if (r.norm() < 1e-13) break;
    Eigen::Matrix3d j;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d dz = z;
      dz[k] += 1e-7;
      j.col(k) = (mismatch(dz) - r) / 1e-7;
    }
    z -= j.lu().solve(r);
  }
  return {std::polar(1.03, 0.0), std::polar(z[2], z[0]), std::polar(1.01, z[1])};
}

}  // namespace

TEST(Admittance, TapAndChargingStamp) {
  auto c = three_bus();
  auto y = build_admittance(c, branch_status(c));
  const cplx ys = 1.0 / cplx(0.02, 0.12);
  EXPECT_NEAR(std::abs(y(1, 2) - (-ys / 1.05)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(y(2, 1) - y(1, 2)), 0.0, 1e-15);
  const cplx expect22 = 1.0 / cplx(0.01, 0.1) + cplx(0, 0.01) + (ys + cplx(0, 0.01)) / (1.05 * 1.05);
  EXPECT_NEAR(std::abs(y(1, 1) - expect22), 0.0, 1e-12);
}

TEST(Islands, DeadAreaWithoutSource) {
  auto c = three_bus();
  c.gens[1].online = false;
  std::vector<bool> br{false, false, true};
  auto isl = compute_islands(c, br, {true, false});
  EXPECT_EQ(isl[0], 0);
  EXPECT_EQ(isl[2], 0);
  EXPECT_EQ(isl[1], -1);
}

TEST(MachineInjection, MatchesInitialisedOutput) {
  Generator g;
  GenState gs;
  const cplx v = std::polar(1.02, 0.1), s(0.8, 0.25);
  init_machine(g, gs, v, s);
  const cplx i = machine_injection(g.m, gs.delta, gs.ed, gs.eq, v);
  EXPECT_NEAR(std::abs(v * std::conj(i) - s), 0.0, 1e-12);
}

TEST(Motor, OperatingPointDrawsRequestedPower) {
  MotorParams mp;
  mp.share = 1.0;
  const cplx v = std::polar(0.98, -0.05);
  auto op = motor_operating_point(mp, v, 0.4, 60.0);
  EXPECT_NEAR(std::real(v * std::conj(op.current)), 0.4, 1e-9);
  auto st = motor_steady_state(mp, v, op.torque_coeff);
  EXPECT_NEAR(st.slip, op.slip, 1e-9);
}

TEST(PowerFlow, AgreesWithPolarNewton) {
  auto c = three_bus();
  SimState st = make_state(c);
  std::vector<cplx> ms{cplx(0.36, 0.2)};
  st.loads[0].q = 0.2;
  auto pf = solve_powerflow_he(c, st, ms);
  auto ref = newton_pf(c, ms, 0.2);
  for (int b = 0; b < 3; ++b) EXPECT_NEAR(std::abs(pf.v[b] - ref[b]), 0.0, 1e-8) << b;
  EXPECT_NEAR(std::abs(pf.v[2]), 1.01, 1e-10);
  EXPECT_NEAR(pf.gen_s[1].real(), 0.6, 1e-8);
}

TEST(Equilibrium, DynamicResidualVanishes) {
  auto c = three_bus();
  SimState st = init_equilibrium(c);
  EXPECT_LT(steady_residual(c, st), 1e-9);
  EXPECT_NEAR(gen_power(c, st, 1).real(), 0.6, 1e-8);
}

TEST(Validation, RejectsUnknownBus) {
  auto c = three_bus();
  c.loads[0].bus = 9;
  EXPECT_THROW(validate(c), Error);
}
