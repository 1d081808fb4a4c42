#include <gtest/gtest.h>

#include "hesim/builtins.hpp"
#include "hesim/case_io.hpp"
#include "hesim/scheduler.hpp"

using namespace hesim;

namespace {

ErrorKind kind_of(const std::string& text) {
  try {
    parse_case(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::SegmentFailure;
}

std::string message_of(const std::string& text) {
  try {
    parse_case(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(CaseIo, TwoBusParameters) {
  const auto c = parse_case(write_case(builtin::twobus()));
  ASSERT_EQ(c.buses.size(), 2u);
  EXPECT_EQ(c.buses[0].vm, 1.01);
  EXPECT_EQ(c.branches[0].r, 0.01);
  EXPECT_EQ(c.branches[0].x, 0.05);
  EXPECT_EQ(c.loads[0].p, 0.1);
  EXPECT_EQ(c.loads[0].q, 0.3);
}

TEST(CaseIo, EmptyFileIsParseError) {
  EXPECT_EQ(kind_of(""), ErrorKind::ParseError);
  EXPECT_EQ(kind_of("# only a comment\n\n"), ErrorKind::ParseError);
}

TEST(CaseIo, DanglingBusNamed) {
  const std::string text = "CASE name=x\nBUS id=1 type=SLACK\nBUS id=2\nBRANCH id=1 from=1 to=7 r=0 x=0.1\n";
  EXPECT_EQ(kind_of(text), ErrorKind::ValidationError);
  EXPECT_NE(message_of(text).find("bus 7"), std::string::npos);
}

TEST(CaseIo, ZeroImpedanceRejected) {
  EXPECT_EQ(kind_of("CASE name=x\nBUS id=1 type=SLACK\nBUS id=2\nBRANCH id=1 from=1 to=2 r=0 x=0\n"),
            ErrorKind::ValidationError);
}

TEST(CaseIo, SyntaxErrorsCarryLineNumbers) {
  EXPECT_NE(message_of("CASE name=x\nBUS id=1\nWIDGET id=3\n").find("line 3"), std::string::npos);
  EXPECT_NE(message_of("CASE name=x\nBUS id=1 vm=abc\n").find("line 2"), std::string::npos);
  EXPECT_NE(message_of("CASE name=x\nBUS id=1 colour=red\n").find("unknown key"), std::string::npos);
  EXPECT_NE(message_of("CASE name=x\nBUS id=1 vm=nan\n").find("non-finite"), std::string::npos);
  EXPECT_EQ(kind_of("CASE name=x\nBUS id=1\nEVENT kind=MARK\n"), ErrorKind::ParseError);
  EXPECT_EQ(kind_of("CASE name=x\nBUS id=1\nEVENT at=1 kind=EXPLODE\n"), ErrorKind::ParseError);
}

TEST(CaseIo, ConditionsRoundTrip) {
  const auto c = parse_case(
      "CASE name=x\nBUS id=1 type=SLACK\nBUS id=2\nBRANCH id=1 from=1 to=2 x=0.1\n"
      "LOAD id=1 bus=2 p=0.5\nEVENT when=V(2)<=0.95 kind=CUT_LOAD target=1 label=uvls\n");
  ASSERT_TRUE(c.script[0].condition.has_value());
  EXPECT_EQ(c.script[0].condition->quantity, Quantity::BusVoltage);
  EXPECT_FALSE(c.script[0].condition->greater);
  EXPECT_EQ(c.script[0].condition->value, 0.95);
  EXPECT_EQ(parse_case(write_case(c)), c);
}

class BuiltinRoundTrip : public ::testing::TestWithParam<int> {};

TEST_P(BuiltinRoundTrip, RewriteIsByteIdentical) {
  const GridCase cases[] = {builtin::twobus(), builtin::smib(), builtin::fourbus()};
  const auto& c = cases[GetParam()];
  const std::string text = write_case(c);
  const auto parsed = parse_case(text);
  EXPECT_EQ(parsed, c);
  EXPECT_EQ(write_case(parsed), text);
  EXPECT_EQ(parse_case(write_case(parse_case(text))), parse_case(text));
}

INSTANTIATE_TEST_SUITE_P(Cases, BuiltinRoundTrip, ::testing::Values(0, 1, 2));

TEST(TrajectoryIo, FlatRunHasConstantColumns) {
  auto c = builtin::fourbus();
  c.script.clear();
  RunConfig cfg;
  cfg.t_end = 20.0;
  const auto r = run_simulation(c, cfg);
  ASSERT_TRUE(r.ok());
  const auto tab = sample_trajectory(c, r.traj, 1.0);
  ASSERT_EQ(tab.t.size(), 21u);
  for (const auto& row : tab.values)
    for (std::size_t j = 0; j < row.size(); ++j) EXPECT_NEAR(row[j], tab.values[0][j], 1e-8) << tab.columns[j];
}

TEST(TrajectoryIo, RoundTripAndSamplingFidelity) {
  auto c = builtin::smib();
  RunConfig cfg;
  cfg.mode = RunMode::Dynamic;
  const auto r = run_simulation(c, cfg);
  ASSERT_TRUE(r.ok());
  const auto tab = sample_trajectory(c, r.traj, 0.37);
  const std::string text = write_trajectory(tab);
  const auto back = parse_trajectory(text);
  EXPECT_EQ(back, tab);
  EXPECT_EQ(write_trajectory(back), text);
  EXPECT_EQ(parse_trajectory(write_trajectory(parse_trajectory(text))), parse_trajectory(text));
  for (std::size_t i = 0; i < tab.t.size(); i += 5) {
    const auto& seg = r.traj.segments[segment_index(r.traj, tab.t[i])];
    const auto direct = trajectory_row(c, segment_state(c, seg, tab.t[i] - seg.t0));
    EXPECT_EQ(direct, tab.values[i]);
  }
  ASSERT_FALSE(back.events.empty());
  EXPECT_EQ(back.events[0].kind, "CUT_BRANCH");
}

TEST(TrajectoryIo, RejectsNonIncreasingTimes) {
  EXPECT_THROW(parse_trajectory("t,mode,f\n0,dyn,60\n0,dyn,60\n"), Error);
  EXPECT_THROW(parse_trajectory("t,mode,f\n0,dyn\n"), Error);
  EXPECT_THROW(parse_trajectory(""), Error);
}

TEST(TrajectoryIo, FourBusFrequencySagsThenRecovers) {
  auto c = builtin::fourbus();
  RunConfig cfg;
  cfg.t_end = 60.0;
  const auto r = run_simulation(c, cfg);
  ASSERT_TRUE(r.ok());
  const auto tab = sample_trajectory(c, r.traj, 0.1);
  double fmin = 1e9;
  std::size_t imin = 0;
  for (std::size_t i = 0; i < tab.t.size(); ++i)
    if (tab.t[i] > 30.0 && tab.values[i][0] < fmin) {
      fmin = tab.values[i][0];
      imin = i;
    }
  EXPECT_LT(fmin, c.fs - 0.01);
  EXPECT_LT(tab.t[imin], 35.0);
  EXPECT_GT(tab.values.back()[0], c.fs - 0.1 * (c.fs - fmin));
}
