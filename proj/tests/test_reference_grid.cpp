#include <gtest/gtest.h>

#include "hesim/builtins.hpp"
#include "hesim/reference_grid.hpp"
#include "hesim/scheduler.hpp"

using namespace hesim;

TEST(ReferenceRun, SmibMatchesHeDynamic) {
  const auto c = builtin::smib();
  RunConfig cfg;
  cfg.mode = RunMode::Dynamic;
  const auto he = run_simulation(c, cfg);
  ASSERT_TRUE(he.ok());
  RefOptions opt;
  opt.abs_tol = opt.rel_tol = 1e-9;
  opt.h = 0.05;
  const auto ref = simulate_reference(c, 100.0, opt);
  EXPECT_NEAR(ref.t.back(), 10.0, 1e-12);
  double worst = 0.0;
  for (std::size_t k = 0; k < ref.t.size(); ++k)
    worst = std::max(worst, max_state_difference(state_at(c, he.traj, ref.t[k]), ref.states[k]));
  EXPECT_LT(worst, 1e-5);
}

TEST(ReferenceRun, StoresPostEventStateAtSwitchInstant) {
  const auto c = builtin::smib();
  RefOptions opt;
  opt.h = 0.1;
  const auto ref = simulate_reference(c, 2.0, opt);
  std::size_t k = 0;
  while (std::abs(ref.t[k] - 1.0) > 1e-12) ++k;
  EXPECT_FALSE(ref.states[k].branches[1].online);
  EXPECT_TRUE(ref.states[k - 1].branches[1].online);
}

TEST(ReferenceRun, ConditionalMarkByLinearInterpolation) {
  const auto c = builtin::twobus();
  RefOptions opt;
  opt.h = 0.01;
  opt.method = RefMethod::ModifiedEuler;
  const auto ref = simulate_reference(c, 100.0, opt);
  std::optional<double> t;
  for (const auto& e : ref.events)
    if (e.kind == "MARK") t = e.t;
  ASSERT_TRUE(t);
  TwoBusCase tb;
  tb.i_th = 3.0;
  EXPECT_NEAR(*t, two_bus_event_time(tb), 1e-4);
}

TEST(ReferenceRun, RejectsConditionalSwitches) {
  auto c = builtin::twobus();
  c.script[1].kind = EventKind::CutLoad;
  c.script[1].target = 1;
  EXPECT_THROW(simulate_reference(c, 10.0), Error);
}
