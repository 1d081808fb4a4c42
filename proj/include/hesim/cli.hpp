#pragma once

// Command-line support: case lookup, run summaries and solver comparison
// reports. Kept free of argument parsing so the tests can drive it.

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hesim/builtins.hpp"
#include "hesim/case_io.hpp"
#include "hesim/reference_grid.hpp"
#include "hesim/scheduler.hpp"

namespace hesim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSolveFailure = 1;
inline constexpr int kExitUsage = 2;

/// "builtin:NAME" selects a built-in case; anything else is a file path.
inline GridCase load_case(const std::string& spec) {
  constexpr std::string_view prefix = "builtin:";
  if (spec.starts_with(prefix)) return builtin::by_name(spec.substr(prefix.size()));
  return parse_case(read_file(spec));
}

struct RunSummary {
  std::string case_name;
  RunMode mode = RunMode::Hybrid;
  int order = 0;
  double eps_t = 0.0;
  double simulated_time = 0.0;
  double qss_time = 0.0;
  std::size_t system_events = 0;
  std::size_t logged_events = 0;
  std::size_t dynamic_segments = 0;
  std::size_t qss_segments = 0;
  std::optional<RunFailure> failure;
  double wall_time = 0.0;

  double qss_fraction() const { return simulated_time > 0.0 ? qss_time / simulated_time : 0.0; }
};

inline RunSummary summarize(const GridCase& c, const RunConfig& cfg, const RunResult& r) {
  RunSummary s;
  s.case_name = c.name;
  s.mode = cfg.mode;
  s.order = cfg.order;
  s.eps_t = cfg.eps_t;
  s.simulated_time = r.traj.simulated_time();
  s.qss_time = r.traj.qss_time();
  s.system_events = r.system_events;
  s.logged_events = r.traj.events.size();
  s.dynamic_segments = r.traj.segment_count(Mode::Dynamic);
  s.qss_segments = r.traj.segment_count(Mode::Qss);
  s.failure = r.failure;
  s.wall_time = r.wall_time;
  return s;
}

/// Machine-readable summary. Wall time is omitted so identical runs give
/// identical files.
inline std::string summary_kv(const RunSummary& s) {
  std::ostringstream o;
  o << "case=" << s.case_name << "\n"
    << "mode=" << to_string(s.mode) << "\n"
    << "order=" << s.order << "\n"
    << "eps_t=" << fmt(s.eps_t) << "\n"
    << "status=" << (s.failure ? "failed" : "ok") << "\n"
    << "simulated_time=" << fmt(s.simulated_time) << "\n"
    << "qss_time=" << fmt(s.qss_time) << "\n"
    << "dynamic_time=" << fmt(s.simulated_time - s.qss_time) << "\n"
    << "qss_fraction=" << fmt(s.qss_fraction()) << "\n"
    << "system_events=" << s.system_events << "\n"
    << "logged_events=" << s.logged_events << "\n"
    << "segments_dynamic=" << s.dynamic_segments << "\n"
    << "segments_qss=" << s.qss_segments << "\n";
  if (s.failure) {
    o << "failure_kind=" << to_string(s.failure->kind) << "\n"
      << "failure_time=" << fmt(s.failure->t) << "\n";
  }
  return o.str();
}

inline std::map<std::string, std::string> parse_kv(std::string_view text) {
  std::map<std::string, std::string> out;
  for (auto line : detail::split(text, '\n')) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) continue;
    out[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
  }
  return out;
}

inline std::string summary_text(const RunSummary& s) {
  std::ostringstream o;
  o << "case " << s.case_name << ", mode " << to_string(s.mode) << ": " << (s.failure ? "FAILED" : "completed") << "\n";
  if (s.failure) o << "  failure: " << s.failure->message << " (t = " << fmt(s.failure->t) << " s)\n";
  o << "  simulated time   " << fmt(s.simulated_time) << " s\n"
    << "  QSS time         " << fmt(s.qss_time) << " s (fraction " << fmt(s.qss_fraction()) << ")\n"
    << "  dynamic time     " << fmt(s.simulated_time - s.qss_time) << " s\n"
    << "  system events    " << s.system_events << "\n"
    << "  segments         " << s.dynamic_segments << " dynamic, " << s.qss_segments << " QSS\n"
    << "  wall time        " << fmt(std::round(s.wall_time * 1e3) / 1e3) << " s\n";
  return o.str();
}

// ---- Comparison ---------------------------------------------------------------

/// A comparison participant: an HE run mode or a reference method.
struct ConfigResult {
  std::string name;
  TrajectoryTable table;
  std::optional<std::string> failure;
};

inline bool is_reference_method(const std::string& name) {
  return name == "me" || name == "trap" || name == "adaptive";
}

inline TrajectoryTable reference_table(const GridCase& c, const ReferenceRun& run, double dt) {
  TrajectoryTable tab;
  tab.columns = trajectory_columns(c);
  tab.events = run.events;
  for (std::size_t k = 0; k < run.t.size(); ++k) {
    const double t = run.t[k];
    const bool on_grid = std::abs(t / dt - std::round(t / dt)) < 1e-7 || k + 1 == run.t.size();
    if (!on_grid || (!tab.t.empty() && t <= tab.t.back())) continue;
    tab.t.push_back(t);
    tab.mode.push_back("ref");
    tab.values.push_back(trajectory_row(c, run.states[k]));
  }
  return tab;
}

inline ConfigResult run_config(const GridCase& c, const std::string& name, RunConfig cfg, double dt) {
  ConfigResult out;
  out.name = name;
  if (is_reference_method(name)) {
    RefOptions opt;
    opt.h = dt;
    opt.method = name == "me" ? RefMethod::ModifiedEuler : name == "trap" ? RefMethod::Trapezoidal : RefMethod::Adaptive;
    opt.abs_tol = opt.rel_tol = 1e-9;
    try {
      out.table = reference_table(c, simulate_reference(c, cfg.t_end, opt), dt);
    } catch (const Error& e) {
      out.failure = e.what();
    }
    return out;
  }
  cfg.mode = run_mode_from_string(name);
  const auto r = run_simulation(c, cfg);
  out.table = sample_trajectory(c, r.traj, dt);
  if (r.failure) out.failure = r.failure->message;
  return out;
}

struct ColumnDifference {
  std::string column;
  double max_abs = 0.0;
  double mean_abs = 0.0;
};

struct EventTime {
  std::string kind;
  int target = 0;
  std::string label;
  std::vector<std::optional<double>> t;  // per configuration
};

struct CompareReport {
  std::vector<std::string> configs;
  std::vector<std::optional<std::string>> failures;
  std::vector<std::size_t> matched_rows;              // per configuration, against the first
  std::vector<std::vector<ColumnDifference>> diffs;   // per configuration, against the first
  std::vector<EventTime> conditional_events;
};

/// Differences of every configuration against the first on rows whose times
/// coincide. Conditional event times are tabulated per configuration.
inline CompareReport compare(const GridCase& c, const std::vector<ConfigResult>& results) {
  CompareReport rep;
  if (results.empty()) return rep;
  const auto& base = results.front().table;
  for (const auto& r : results) {
    rep.configs.push_back(r.name);
    rep.failures.push_back(r.failure);
    std::vector<ColumnDifference> d(base.columns.size());
    for (std::size_t j = 0; j < d.size(); ++j) d[j].column = base.columns[j];
    std::size_t matched = 0, i = 0;
    for (std::size_t k = 0; k < r.table.t.size(); ++k) {
      while (i < base.t.size() && base.t[i] < r.table.t[k] - 1e-9) ++i;
      if (i == base.t.size() || std::abs(base.t[i] - r.table.t[k]) > 1e-9) continue;
      ++matched;
      for (std::size_t j = 0; j < d.size(); ++j) {
        const double e = std::abs(r.table.values[k][j] - base.values[i][j]);
        d[j].max_abs = std::max(d[j].max_abs, e);
        d[j].mean_abs += e;
      }
    }
    for (auto& x : d) x.mean_abs = matched ? x.mean_abs / static_cast<double>(matched) : 0.0;
    rep.matched_rows.push_back(matched);
    rep.diffs.push_back(std::move(d));
  }
  for (const auto& ev : c.script) {
    if (!ev.condition) continue;
    EventTime et{to_string(ev.kind), ev.target, ev.label, {}};
    for (const auto& r : results) {
      std::optional<double> t;
      for (const auto& rec : r.table.events)
        if (rec.kind == et.kind && rec.target == et.target && rec.label == et.label) {
          t = rec.t;
          break;
        }
      et.t.push_back(t);
    }
    rep.conditional_events.push_back(std::move(et));
  }
  return rep;
}

inline std::string compare_text(const CompareReport& rep) {
  std::ostringstream o;
  o << "# differences against " << (rep.configs.empty() ? "" : rep.configs.front()) << "\n";
  o << "config,column,max_abs,mean_abs,rows\n";
  for (std::size_t k = 1; k < rep.configs.size(); ++k)
    for (const auto& d : rep.diffs[k])
      o << rep.configs[k] << "," << d.column << "," << fmt(d.max_abs) << "," << fmt(d.mean_abs) << ","
        << rep.matched_rows[k] << "\n";
  if (!rep.conditional_events.empty()) {
    o << "# conditional event times\n";
    o << "kind,target,label";
    for (const auto& n : rep.configs) o << "," << n;
    for (std::size_t k = 1; k < rep.configs.size(); ++k) o << ",d_" << rep.configs[k];
    o << "\n";
    for (const auto& e : rep.conditional_events) {
      o << e.kind << "," << e.target << "," << e.label;
      for (const auto& t : e.t) o << "," << (t ? fmt(*t) : "none");
      for (std::size_t k = 1; k < e.t.size(); ++k)
        o << "," << (e.t[k] && e.t[0] ? fmt(*e.t[k] - *e.t[0]) : "none");
      o << "\n";
    }
  }
  for (std::size_t k = 0; k < rep.configs.size(); ++k)
    if (rep.failures[k]) o << "# " << rep.configs[k] << " failed: " << *rep.failures[k] << "\n";
  return o.str();
}

}  // namespace hesim::cli
