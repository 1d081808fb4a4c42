// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hesim/builtins.hpp"
#include "hesim/reference_grid.hpp"
#include "hesim/scheduler.hpp"

using namespace hesim;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Two-bus threshold crossing times: HE localization vs the closed form,
// and fixed-step ME/TRAP with linear interpolation on the same thresholds.
Outcome two_bus_event_times() {
  const TwoBusCase tb;
  const double i_max = std::sqrt(two_bus_current_sq(tb, two_bus_collapse_time(tb)));
  constexpr int kThresholds = 24;
  double he_worst = 0.0;
  int he_ok = 0, beaten = 0;
  for (int k = 1; k <= kThresholds; ++k) {
    TwoBusCase tk = tb;
    tk.i_th = i_max * k / (kThresholds + 1.0);
    const double exact = two_bus_event_time(tk);
    auto c = builtin::twobus();
    c.script[1].condition->value = tk.i_th;
    c.script[2].time = std::floor(two_bus_collapse_time(tb) * 100.0) / 100.0;
    RunConfig cfg;
    cfg.mode = RunMode::Qss;
    cfg.t_end = *c.script[2].time;
    const auto r = run_simulation(c, cfg);
    std::optional<double> t_he;
    for (const auto& e : r.traj.events)
      if (e.kind == "MARK") t_he = e.t;
    if (!t_he) continue;
    const double e_he = std::abs(*t_he - exact);
    he_worst = std::max(he_worst, e_he);
    he_ok += e_he <= 1e-4;
    bool both = true;
    for (RefMethod m : {RefMethod::ModifiedEuler, RefMethod::Trapezoidal}) {
      RefOptions opt;
      opt.method = m;
      opt.h = 0.01;
      const auto ref = simulate_reference(c, cfg.t_end, opt);
      std::optional<double> t_ref;
      for (const auto& e : ref.events)
        if (e.kind == "MARK") t_ref = e.t;
      both = both && t_ref && std::abs(*t_ref - exact) > e_he;
    }
    beaten += both;
  }
  return {he_ok == kThresholds && beaten == kThresholds,
          std::to_string(kThresholds) + " thresholds, HE worst error " + sci(he_worst) + " s, HE within 1e-4 on " +
              std::to_string(he_ok) + ", HE strictly better than ME and TRAP on " + std::to_string(beaten)};
}

// 2. Interval bounds contain every dense sample of random polynomials.
Outcome polynomial_bound_soundness() {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> coeff(-10.0, 10.0), span(0.0, 2.0);
  std::uniform_int_distribution<int> degree(0, 15);
  constexpr int kPolys = 10000, kSamples = 10000;
  int bad = 0;
  std::vector<double> x;
  for (int p = 0; p < kPolys; ++p) {
    x.resize(static_cast<std::size_t>(degree(rng)) + 1);
    for (auto& v : x) v = coeff(rng);
    double T = 0.0;
    while (T == 0.0) T = span(rng);
    const auto b = poly_bounds(x, T);
    bool ok = true;
    for (int i = 0; i < kSamples && ok; ++i) {
      const double t = T * (static_cast<double>(i) / (kSamples - 1));  // never past T
      double v = 0.0;
      for (std::size_t k = x.size(); k-- > 0;) v = v * t + x[k];
      ok = b.lower <= v && v <= b.upper;
    }
    bad += !ok;
  }
  return {bad == 0, std::to_string(kPolys) + " polynomials, " + std::to_string(bad) + " containing a sample outside"};
}

// Increment x(t) - x(0) from the non-constant terms in extended precision,
// free of cancellation against x(0).
template <class C>
long double increment_ld(const std::vector<C>& c, long double t) {
  long double v = 0.0L;
  for (std::size_t k = c.size(); k-- > 1;) v = (v + c[k]) * t;
  return v;
}

long double horner_ld(const std::vector<double>& c, long double t) { return increment_ld(c, t) + c[0]; }

// 3. Rate bounds dominate the sampled average rate on every dynamic segment
// of the 4-bus hybrid run.
Outcome rate_bound_soundness() {
  const auto c = builtin::fourbus();
  RunConfig cfg;
  cfg.t_end = 1e9;
  const auto r = run_simulation(c, cfg);
  if (!r.ok()) return {false, "run failed: " + r.failure->message};
  std::size_t segments = 0, checks = 0, violations = 0;
  for (const auto& seg : r.traj.segments) {
    if (seg.mode != Mode::Dynamic) continue;
    ++segments;
    for (const auto& [name, mv] : monitored_variables(c, seg)) {
      const double T = seg.span;
      const auto ps = ps_rate_bound(mv.series, T);
      const auto pa = pa_rate_bound(mv.pade, T);
      const auto& x = mv.series.coeffs();
      // P/Q - P(0)/Q(0) = (P - c Q) / Q with c = P(0)/Q(0).
      const auto& num = mv.pade.num;
      const auto& den = mv.pade.den;
      std::vector<long double> shifted(std::max(num.size(), den.size()), 0.0L);
      const long double c0 = static_cast<long double>(num[0]) / den[0];
      for (std::size_t k = 1; k < shifted.size(); ++k)
        shifted[k] = (k < num.size() ? num[k] : 0.0) - c0 * (k < den.size() ? den[k] : 0.0);
      for (int k = 1; k <= 100; ++k) {
        const long double t = T * (k / 100.0);
        ++checks;
        violations += std::fabs(increment_ld(x, t) / t) > ps.delta;
        if (!pa.defined()) continue;
        ++checks;
        violations += std::fabs(increment_ld(shifted, t) / horner_ld(den, t) / t) > pa.delta;
      }
    }
  }
  return {segments > 0 && violations == 0, std::to_string(segments) + " dynamic segments, " + std::to_string(checks) +
                                               " checks, " + std::to_string(violations) + " violations"};
}

// 4. Published deltas classify as steady with the published deciding test.
Outcome table_decisions() {
  const double eps = 1e-3;
  const auto w = classify(6.11e-4, 1.26e-4, eps);
  const auto v4 = classify(0.0279, 9.85e-4, eps);
  const auto vm = classify(3.76e-4, 0.0013, eps);
  const bool ok = w.is_steady && v4.is_steady && vm.is_steady && w.decided_by == Criterion::Both &&
                  v4.decided_by == Criterion::PA && vm.decided_by == Criterion::PS;
  return {ok, std::string("omega' ") + to_string(w.decided_by) + ", V4^2 " + to_string(v4.decided_by) + ", vm2 " +
                  to_string(vm.decided_by)};
}

struct PairRuns {
  RunResult hybrid, dynamic;
};

const PairRuns& fourbus_pair() {
  static const PairRuns runs = [] {
    const auto c = builtin::fourbus();
    RunConfig cfg;
    cfg.t_end = 1e9;
    PairRuns p;
    p.hybrid = run_simulation(c, cfg);
    cfg.mode = RunMode::Dynamic;
    p.dynamic = run_simulation(c, cfg);
    return p;
  }();
  return runs;
}

struct Diff {
  double df = 0.0, dv = 0.0;
};

Diff max_difference(const GridCase& c, const Trajectory& a, const Trajectory& b, double dt) {
  Diff d;
  for (long k = 0; k * dt <= a.t_end + 1e-9; ++k) {
    const double t = std::min(k * dt, a.t_end);
    const auto sa = state_at(c, a, t), sb = state_at(c, b, t);
    d.df = std::max(d.df, std::abs(system_frequency(c, sa) - system_frequency(c, sb)));
    for (std::size_t i = 0; i < sa.v.size(); ++i) d.dv = std::max(d.dv, std::abs(std::abs(sa.v[i]) - std::abs(sb.v[i])));
  }
  return d;
}

// 5. Hybrid tracks full dynamic on the 4-bus script.
Outcome hybrid_fidelity() {
  const auto& p = fourbus_pair();
  if (!p.hybrid.ok() || !p.dynamic.ok()) return {false, "a run failed"};
  const auto d = max_difference(builtin::fourbus(), p.hybrid.traj, p.dynamic.traj, 0.05);
  return {d.df <= 0.02 && d.dv <= 0.005, "max |df| " + sci(d.df) + " Hz, max |dV| " + sci(d.dv) + " pu"};
}

// 6. QSS coverage and relative speed on the same runs.
Outcome qss_coverage() {
  const auto& p = fourbus_pair();
  if (!p.hybrid.ok() || !p.dynamic.ok()) return {false, "a run failed"};
  const double frac = p.hybrid.traj.qss_time() / p.hybrid.traj.simulated_time();
  return {frac >= 0.7 && p.hybrid.wall_time < p.dynamic.wall_time,
          "QSS fraction " + sci(frac) + ", wall hybrid " + sci(p.hybrid.wall_time) + " s vs dynamic " +
              sci(p.dynamic.wall_time) + " s"};
}

double oracle_gap(const GridCase& c, double t_end) {
  RunConfig cfg;
  cfg.mode = RunMode::Dynamic;
  cfg.t_end = t_end;
  const auto he = run_simulation(c, cfg);
  if (!he.ok()) return INFINITY;
  RefOptions opt;
  opt.abs_tol = opt.rel_tol = 1e-9;
  opt.h = 0.05;
  const auto ref = simulate_reference(c, t_end, opt);
  double worst = 0.0;
  for (std::size_t k = 0; k < ref.t.size(); ++k)
    worst = std::max(worst, max_state_difference(state_at(c, he.traj, ref.t[k]), ref.states[k]));
  return worst;
}

// 7. Full-dynamic HE against the adaptive integrator.
Outcome oracle_equivalence() {
  const double a = oracle_gap(builtin::smib(), 10.0);
  const double b = oracle_gap(builtin::fourbus(), 60.0);
  return {a <= 1e-5 && b <= 1e-5, "single machine " + sci(a) + ", 4-bus first 60 s " + sci(b)};
}

// 8. Switch solutions against Newton re-solves, and cut/re-add round trip.
// The parallel cut uses the single-machine case, which has twin lines.
Outcome switch_correctness() {
  auto ev = [](EventKind k, int target, std::vector<double> values = {}) {
    SimEvent e;
    e.kind = k;
    e.target = target;
    e.values = std::move(values);
    return e;
  };
  auto max_dv = [](const SimState& a, const SimState& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
  };
  auto gap = [&](const GridCase& c, const SimEvent& e) {
    const auto plan = plan_switch(c, init_equilibrium(c), e);
    return max_dv(solve_switch_he(c, plan), switch_newton(c, plan));
  };
  const auto four = builtin::fourbus();
  const auto smib = builtin::smib();
  const double shunt = gap(four, ev(EventKind::Fault, 2, {0.5, -2.0}));
  const double param = gap(four, ev(EventKind::SetBranch, 1, {0.02, 0.2}));
  const double cut = gap(smib, ev(EventKind::CutBranch, 2));
  const auto pre = init_equilibrium(smib);
  const auto off = apply_switch(smib, pre, ev(EventKind::CutBranch, 2));
  const double trip = max_dv(apply_switch(smib, off, ev(EventKind::AddBranch, 2)), pre);
  const bool ok = shunt <= 1e-8 && cut <= 1e-8 && param <= 1e-8 && trip <= 1e-8;
  return {ok, "shunt " + sci(shunt) + ", parallel cut " + sci(cut) + ", parameter change " + sci(param) +
                  ", round trip " + sci(trip)};
}

// 9. Scripted 39-bus restoration in hybrid and full-dynamic mode.
Outcome restoration() {
  const auto c = builtin::ne39();
  std::size_t events = 0;
  for (const auto& e : c.script) events += e.kind != EventKind::Stop;
  RunConfig cfg;
  cfg.t_end = 1e9;
  const auto h = run_simulation(c, cfg);
  cfg.mode = RunMode::Dynamic;
  const auto d = run_simulation(c, cfg);
  if (!h.ok() || !d.ok())
    return {false, "run failed: " + (h.ok() ? d.failure->message : h.failure->message)};
  const auto diff = max_difference(c, h.traj, d.traj, 0.05);
  return {events >= 30 && diff.dv <= 0.01,
          std::to_string(events) + " events, max |dV| " + sci(diff.dv) + " pu, wall hybrid " + sci(h.wall_time) +
              " s vs dynamic " + sci(d.wall_time) + " s"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "two-bus event time", 10.0, two_bus_event_times},
      {2, "polynomial bound soundness", 30.0, polynomial_bound_soundness},
      {3, "rate bound soundness", 600.0, rate_bound_soundness},
      {4, "published steady-state decisions", 600.0, table_decisions},
      {5, "hybrid fidelity", 300.0, hybrid_fidelity},
      {6, "QSS coverage and relative speed", 300.0, qss_coverage},
      {7, "oracle equivalence", 120.0, oracle_equivalence},
      {8, "switch-event correctness", 600.0, switch_correctness},
      {9, "miniature restoration", 600.0, restoration},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double wall = seconds_since(t0);
    const bool pass = o.pass && wall < cr.budget_s;
    failed += !pass;
    std::printf("%s criterion %d: %s (%s; %.2f s of %.0f s budget)\n", pass ? "PASS" : "FAIL", cr.id, cr.title,
                o.detail.c_str(), wall, cr.budget_s);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
