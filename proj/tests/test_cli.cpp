#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "hesim/cli.hpp"

using namespace hesim;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HESIM_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("hesim_test_" + name)).string();
}

std::string case_path(const std::string& name) { return std::string(HESIM_SOURCE_DIR) + "/cases/" + name + ".case"; }

}  // namespace

TEST(CaseFiles, MatchBuiltinsByteForByte) {
  for (const auto& name : builtin::names()) {
    const auto text = read_file(case_path(name));
    EXPECT_EQ(text, write_case(builtin::by_name(name))) << name;
    EXPECT_EQ(write_case(parse_case(text)), text) << name;
  }
}

TEST(CaseFiles, RestorationScriptSize) {
  const auto c = builtin::ne39();
  std::size_t switches = 0, gens = 0, loads = 0, ramps = 0;
  for (const auto& e : c.script) {
    switches += is_switch(e.kind);
    gens += e.kind == EventKind::AddGen;
    loads += e.kind == EventKind::AddLoad;
    ramps += e.kind == EventKind::RampGen;
  }
  EXPECT_GE(c.script.size(), 30u);
  EXPECT_GE(gens, 3u);
  EXPECT_GE(loads, 5u);
  EXPECT_GE(ramps, 3u);
  EXPECT_GE(switches, 20u);
}

TEST(Summary, FieldsAndDeterminism) {
  const auto c = builtin::smib();
  RunConfig cfg;
  cfg.t_end = 10.0;
  const auto a = run_simulation(c, cfg), b = run_simulation(c, cfg);
  ASSERT_TRUE(a.ok());
  const auto s = cli::summarize(c, cfg, a);
  const auto kv = cli::parse_kv(cli::summary_kv(s));
  EXPECT_EQ(kv.at("status"), "ok");
  EXPECT_EQ(kv.at("simulated_time"), "10");
  EXPECT_EQ(std::stod(kv.at("qss_time")) + std::stod(kv.at("dynamic_time")), 10.0);
  EXPECT_EQ(kv.count("wall_time"), 0u);
  EXPECT_EQ(cli::summary_kv(s), cli::summary_kv(cli::summarize(c, cfg, b)));
  EXPECT_EQ(write_trajectory(sample_trajectory(c, a.traj, 0.1)), write_trajectory(sample_trajectory(c, b.traj, 0.1)));
}

TEST(Compare, ModeAgainstItselfIsZero) {
  const auto c = builtin::smib();
  RunConfig cfg;
  cfg.t_end = 10.0;
  const std::vector<cli::ConfigResult> rs{cli::run_config(c, "dynamic", cfg, 0.1), cli::run_config(c, "dynamic", cfg, 0.1)};
  const auto rep = cli::compare(c, rs);
  EXPECT_EQ(rep.matched_rows[1], rs[0].table.t.size());
  for (const auto& d : rep.diffs[1]) {
    EXPECT_EQ(d.max_abs, 0.0) << d.column;
    EXPECT_EQ(d.mean_abs, 0.0) << d.column;
  }
}

TEST(Compare, HeEventTimeBeatsModifiedEuler) {
  const auto c = builtin::twobus();
  RunConfig cfg;
  cfg.t_end = 15.0;
  const std::vector<cli::ConfigResult> rs{cli::run_config(c, "qss", cfg, 0.01), cli::run_config(c, "me", cfg, 0.01)};
  const auto rep = cli::compare(c, rs);
  ASSERT_EQ(rep.conditional_events.size(), 1u);
  const auto& t = rep.conditional_events[0].t;
  ASSERT_TRUE(t[0] && t[1]);
  TwoBusCase tb;
  tb.i_th = 3.0;
  const double exact = two_bus_event_time(tb);
  EXPECT_LT(std::abs(*t[0] - exact), std::abs(*t[1] - exact));
}

TEST(Compare, HybridFourBusSummaryCoversQss) {
  const auto c = builtin::fourbus();
  RunConfig cfg;
  cfg.t_end = 1e9;
  const auto r = run_simulation(c, cfg);
  ASSERT_TRUE(r.ok());
  EXPECT_GT(cli::summarize(c, cfg, r).qss_fraction(), 0.7);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("simulate " + case_path("twobus") + " --mode qss --out " + tmp_path("tb.csv")), 0);
  EXPECT_EQ(run_cli("simulate " + case_path("twobus") + " --bogus"), 2);
  EXPECT_EQ(run_cli("simulate " + case_path("twobus") + " --mode sideways"), 2);
  EXPECT_EQ(run_cli("simulate " + tmp_path("missing.case")), 2);
  EXPECT_EQ(run_cli("export-case nowhere"), 2);
  EXPECT_EQ(run_cli("compare builtin:twobus --with qss"), 2);
}

TEST(Cli, SolveFailureExitsOneAndKeepsPartialTrajectory) {
  // Loading past the nose of the PV curve collapses the voltage.
  auto c = builtin::twobus();
  c.script.back().time = 17.0;
  const auto path = tmp_path("collapse.case"), out = tmp_path("collapse.csv");
  write_file(path, write_case(c));
  std::filesystem::remove(out);
  EXPECT_EQ(run_cli("simulate " + path + " --mode qss --out " + out), 1);
  const auto tab = parse_trajectory(read_file(out));
  ASSERT_FALSE(tab.t.empty());
  EXPECT_GT(tab.t.back(), 15.0);
  EXPECT_LT(tab.t.back(), 17.0);
}

TEST(Cli, SimulateWritesSummaryAndTrajectory) {
  const auto kv = tmp_path("fb.kv"), csv = tmp_path("fb.csv");
  ASSERT_EQ(run_cli("simulate builtin:smib --mode dynamic --dt-out 0.5 --summary " + kv + " --out " + csv), 0);
  const auto s = cli::parse_kv(read_file(kv));
  EXPECT_EQ(s.at("mode"), "dynamic");
  EXPECT_EQ(s.at("qss_fraction"), "0");
  const auto tab = parse_trajectory(read_file(csv));
  EXPECT_EQ(tab.t.size(), 21u);
  EXPECT_EQ(tab.t.back(), 10.0);
}
