#pragma once

// Piecewise-analytic simulation record and the quantities evaluated on it.

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hesim/bounds.hpp"
#include "hesim/dae.hpp"
#include "hesim/he_engine.hpp"

namespace hesim {

/// One analytic piece: the solution in local time s on [0, span] anchored at
/// absolute time t0, and the state it was built from (fixes the layout).
struct Segment {
  double t0 = 0.0;
  double span = 0.0;
  Mode mode = Mode::Dynamic;
  std::shared_ptr<const SimState> start;
  SegmentSolution sol;
  int order = 0;
};

struct EventRecord {
  double t = 0.0;
  std::string kind;
  int target = 0;
  std::string label;
};

/// Verdict recorded at each dyn -> qss transition.
struct SwitchVerdict {
  double t = 0.0;
  SteadyStateVerdict verdict;
};

struct Trajectory {
  std::vector<Segment> segments;
  std::vector<EventRecord> events;
  std::vector<SwitchVerdict> verdicts;
  double t_end = 0.0;

  double qss_time() const {
    double s = 0.0;
    for (const auto& g : segments)
      if (g.mode == Mode::Qss) s += g.span;
    return s;
  }
  double simulated_time() const {
    double s = 0.0;
    for (const auto& g : segments) s += g.span;
    return s;
  }
  std::size_t segment_count(Mode m) const {
    return static_cast<std::size_t>(
        std::count_if(segments.begin(), segments.end(), [&](const Segment& g) { return g.mode == m; }));
  }
};

/// State on a segment at local time s.
inline SimState segment_state(const GridCase& c, const Segment& seg, double s) {
  const GridDae m(c, *seg.start, SolveKind::Time);
  std::vector<double> x, y;
  seg.sol.values_at(s, x, y);
  SimState st = *seg.start;
  m.unpack(x.data(), y.data(), st);
  st.t = seg.t0 + s;
  return st;
}

/// Index of the segment that owns absolute time t: the last one starting at
/// or before t (later segments win at shared boundaries).
inline std::size_t segment_index(const Trajectory& tr, double t) {
  const auto it = std::upper_bound(tr.segments.begin(), tr.segments.end(), t,
                                   [](double v, const Segment& g) { return v < g.t0; });
  return it == tr.segments.begin() ? 0 : static_cast<std::size_t>(it - tr.segments.begin()) - 1;
}

inline SimState state_at(const GridCase& c, const Trajectory& tr, double t) {
  if (tr.segments.empty()) throw Error(ErrorKind::DimensionMismatch, "empty trajectory");
  const auto& seg = tr.segments[segment_index(tr, t)];
  return segment_state(c, seg, std::clamp(t - seg.t0, 0.0, seg.span));
}

/// Value of a monitored quantity. Frequency targets a bus (its island).
inline double quantity_value(const GridCase& c, const SimState& st, Quantity q, int target) {
  switch (q) {
    case Quantity::BusVoltage: return std::abs(st.v[c.bus_index(target)]);
    case Quantity::BranchCurrent: return branch_current(c, st, c.branch_index(target));
    case Quantity::Frequency: return island_frequency(c, st, st.island[c.bus_index(target)]);
    case Quantity::GenPower: return gen_power(c, st, c.gen_index(target)).real();
    case Quantity::Time: return st.t;
  }
  return 0.0;
}

inline double condition_value(const GridCase& c, const SimState& st, const Condition& h) {
  const double q = quantity_value(c, st, h.quantity, h.target);
  return h.greater ? q - h.value : h.value - q;
}

inline constexpr int kScanIntervals = 64;
inline constexpr double kLocateTol = 1e-10;

/// Earliest s in (0, window] where h(s) >= 0 after h < 0, found by a scan on
/// 64 subintervals and bisection to 1e-10. The returned point satisfies h >= 0.
inline std::optional<double> locate_conditional_event(const std::function<double(double)>& h, double window) {
  double a = 0.0, ha = h(0.0);
  for (int k = 1; k <= kScanIntervals; ++k) {
    const double b = window * k / kScanIntervals;
    const double hb = h(b);
    if (ha < 0.0 && hb >= 0.0) {
      double lo = a, hi = b;
      while (hi - lo > kLocateTol) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) >= 0.0 ? hi : lo) = mid;
      }
      return hi;
    }
    a = b;
    ha = hb;
  }
  return std::nullopt;
}

inline std::optional<double> locate_conditional_event(const GridCase& c, const Segment& seg, const Condition& cond,
                                                      double window) {
  return locate_conditional_event([&](double s) { return condition_value(c, segment_state(c, seg, s), cond); },
                                  window);
}

/// Series of the variables watched for steadiness on a dynamic segment:
/// machine states except the AGC integrators, motor slip and squared internal
/// voltage, and every energized bus's squared voltage magnitude. Rotor angles
/// are taken relative to the reference generator of their island, which is
/// itself omitted.
inline std::map<std::string, MonitoredVariable> monitored_variables(const GridCase& c, const Segment& seg) {
  std::map<std::string, MonitoredVariable> out;
  const SimState& st = *seg.start;
  const GridDae m(c, st, SolveKind::Time);
  const auto& cx = seg.sol.coeffs.x;
  const auto& cy = seg.sol.coeffs.y;
  auto add = [&](const std::string& name, const Series& s, bool angle = false) {
    out[name] = {s, diagonal_pade(s), angle};
  };
  static const char* gen_names[] = {"delta", "omega", "eq", "ed", "vm", "g1", "g2"};
  for (std::size_t g = 0; g < c.gens.size(); ++g) {
    const int ix = m.gen_x(static_cast<int>(g));
    if (ix < 0 || seg.mode != Mode::Dynamic) continue;
    const std::string id = std::to_string(c.gens[g].id);
    const int ref = st.island_ref_gen[st.island[c.bus_index(c.gens[g].bus)]];
    if (ref != static_cast<int>(g)) add("delta_" + id, cx[ix] - cx[m.gen_x(ref)], true);
    for (int k = 1; k < 7; ++k) add(std::string(gen_names[k]) + "_" + id, cx[ix + k]);
  }
  for (std::size_t l = 0; l < c.loads.size(); ++l) {
    const int ix = m.motor_x(static_cast<int>(l));
    if (ix < 0) continue;
    const std::string id = std::to_string(c.loads[l].id);
    add("slip_" + id, cx[ix]);
    add("e2_" + id, cx[ix + 1] * cx[ix + 1] + cx[ix + 2] * cx[ix + 2]);
  }
  for (std::size_t b = 0; b < c.buses.size(); ++b) {
    const int iy = m.bus_y(static_cast<int>(b));
    if (iy < 0) continue;
    add("v2_" + std::to_string(c.buses[b].id), cy[iy] * cy[iy] + cy[iy + 1] * cy[iy + 1]);
  }
  return out;
}

}  // namespace hesim
