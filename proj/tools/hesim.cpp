// hesim: command-line front end for the hybrid simulator.

#include <cstdlib>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hesim/cli.hpp"

namespace {

using namespace hesim;

enum class Verbosity { Quiet, Info, Debug };

/// HESIM_LOG=quiet|info|debug, default info.
Verbosity verbosity() {
  const char* v = std::getenv("HESIM_LOG");
  if (!v) return Verbosity::Info;
  const std::string s(v);
  if (s == "quiet") return Verbosity::Quiet;
  if (s == "debug") return Verbosity::Debug;
  return Verbosity::Info;
}

void log(Verbosity level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(verbosity())) std::cerr << msg << "\n";
}

struct Knobs {
  std::string case_spec;
  std::string mode = "hybrid";
  int order = 15;
  double eps_t = 1e-3;
  double tol = 1e-6;
  double dt_out = 0.1;
  std::optional<double> t_end;
  std::string out;
  std::string summary;
};

void add_run_options(CLI::App* cmd, Knobs& k, bool with_mode) {
  cmd->add_option("case", k.case_spec, "case file, or builtin:NAME")->required();
  if (with_mode) cmd->add_option("--mode", k.mode, "hybrid, dynamic or qss")->check(CLI::IsMember({"hybrid", "dynamic", "qss"}));
  cmd->add_option("--order", k.order, "series order")->check(CLI::Range(4, 200));
  cmd->add_option("--eps-t", k.eps_t, "steady-state threshold")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", k.tol, "residual tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--dt-out", k.dt_out, "output sampling step, s")->check(CLI::PositiveNumber);
  cmd->add_option("--t-end", k.t_end, "end time, s (default: STOP event, else 100)")->check(CLI::PositiveNumber);
  cmd->add_option("--out", k.out, "output file");
}

RunConfig make_config(const GridCase& c, const Knobs& k) {
  RunConfig cfg;
  cfg.mode = run_mode_from_string(k.mode);
  cfg.order = k.order;
  cfg.eps_t = k.eps_t;
  cfg.tol = k.tol;
  bool has_stop = false;
  for (const auto& e : c.script) has_stop = has_stop || (e.kind == EventKind::Stop && e.time);
  cfg.t_end = k.t_end ? *k.t_end : has_stop ? std::numeric_limits<double>::infinity() : 100.0;
  return cfg;
}

int cmd_simulate(const Knobs& k) {
  const auto c = cli::load_case(k.case_spec);
  const auto cfg = make_config(c, k);
  log(Verbosity::Debug, "running " + c.name + " in " + to_string(cfg.mode) + " mode");
  const auto r = run_simulation(c, cfg);
  if (!k.out.empty()) write_file(k.out, write_trajectory(sample_trajectory(c, r.traj, k.dt_out)));
  const auto s = cli::summarize(c, cfg, r);
  if (!k.summary.empty()) write_file(k.summary, cli::summary_kv(s));
  std::cout << cli::summary_text(s);
  return r.ok() ? cli::kExitOk : cli::kExitSolveFailure;
}

int cmd_scan(const Knobs& k) {
  const auto c = cli::load_case(k.case_spec);
  const auto cfg = make_config(c, k);
  const auto r = run_simulation(c, cfg);
  std::string text = "t,kind,target,label\n";
  for (const auto& e : r.traj.events) text += fmt(e.t) + "," + e.kind + "," + std::to_string(e.target) + "," + e.label + "\n";
  if (!k.out.empty()) write_file(k.out, text);
  std::cout << text;
  if (r.failure) log(Verbosity::Quiet, "failed: " + r.failure->message);
  return r.ok() ? cli::kExitOk : cli::kExitSolveFailure;
}

int cmd_compare(const Knobs& k, const std::vector<std::string>& with) {
  const auto c = cli::load_case(k.case_spec);
  const auto cfg = make_config(c, k);
  std::vector<cli::ConfigResult> results;
  bool failed = false;
  for (const auto& name : with) {
    log(Verbosity::Info, "running " + name);
    results.push_back(cli::run_config(c, name, cfg, k.dt_out));
    failed = failed || results.back().failure.has_value();
  }
  const auto text = cli::compare_text(cli::compare(c, results));
  if (!k.out.empty()) write_file(k.out, text);
  std::cout << text;
  return failed ? cli::kExitSolveFailure : cli::kExitOk;
}

int cmd_export(const std::string& name, const std::string& out) {
  const auto text = write_case(builtin::by_name(name));
  if (out.empty())
    std::cout << text;
  else
    write_file(out, text);
  return cli::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid QSS / full-dynamic holomorphic-embedding power-system simulator"};
  app.require_subcommand(1);
  Knobs sim, scan, cmp;
  std::vector<std::string> with{"hybrid", "dynamic"};
  std::string export_name, export_out;

  auto* s = app.add_subcommand("simulate", "run a case and write trajectory and summary");
  add_run_options(s, sim, true);
  s->add_option("--summary", sim.summary, "key-value summary file");

  auto* sc = app.add_subcommand("scan", "run a case and list executed events");
  add_run_options(sc, scan, true);

  auto* cp = app.add_subcommand("compare", "compare run modes and reference methods");
  add_run_options(cp, cmp, false);
  cp->add_option("--with", with, "configurations: hybrid, dynamic, qss, me, trap, adaptive; the first is the base")
      ->delimiter(',')
      ->check(CLI::IsMember({"hybrid", "dynamic", "qss", "me", "trap", "adaptive"}));

  auto* ex = app.add_subcommand("export-case", "write a built-in case file");
  ex->add_option("name", export_name, "twobus, smib, fourbus or ne39")->required()->check(CLI::IsMember(builtin::names()));
  ex->add_option("--out", export_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
    if (cp->parsed() && with.size() < 2) throw CLI::ValidationError("--with", "needs at least two configurations");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return cli::kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_simulate(sim);
    if (sc->parsed()) return cmd_scan(scan);
    if (cp->parsed()) return cmd_compare(cmp, with);
    return cmd_export(export_name, export_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::ParseError:
      case ErrorKind::ValidationError: return cli::kExitUsage;
      default: return cli::kExitSolveFailure;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitUsage;
  }
}
