#pragma once

// Case description: buses, branches, machines with controllers, ZIP+motor
// loads and the event script, plus the physical helper relations that do not
// depend on the simulation state layout.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hesim/errors.hpp"

namespace hesim {

using cplx = std::complex<double>;

enum class BusType { PQ, Slack };

struct Bus {
  int id = 0;
  double base_kv = 0.0;
  double vm = 1.0;  // initial magnitude; setpoint for slack buses
  double va = 0.0;  // degrees
  BusType type = BusType::PQ;
  double gsh = 0.0;  // shunt conductance, pu
  double bsh = 0.0;  // shunt susceptance, pu

  friend bool operator==(const Bus&, const Bus&) = default;
};

struct Branch {
  int id = 0;
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b = 0.0;    // total line charging
  double tap = 1.0;  // off-nominal ratio on the from side
  bool online = true;

  cplx series_admittance() const { return 1.0 / cplx(r, x); }
  friend bool operator==(const Branch&, const Branch&) = default;
};

/// 4th-order transient machine. ra is the stator resistance; xd1/xq1 are the
/// transient reactances that form the Thevenin interface.
struct MachineParams {
  double ra = 0.0;
  double xd = 1.8;
  double xq = 1.7;
  double xd1 = 0.3;
  double xq1 = 0.55;
  double td01 = 6.0;
  double tq01 = 0.5;
  double h = 5.0;
  double d = 2.0;
  friend bool operator==(const MachineParams&, const MachineParams&) = default;
};

/// Proportional exciter with a first-order lag: ta*vm' = ka*(vref - |V|) - vm.
struct AvrParams {
  double ka = 50.0;
  double ta = 0.05;
  friend bool operator==(const AvrParams&, const AvrParams&) = default;
};

/// Droop governor with two cascaded lags (t1 then t2).
struct GovParams {
  double r = 0.05;
  double t1 = 0.3;
  double t2 = 0.1;
  friend bool operator==(const GovParams&, const GovParams&) = default;
};

struct Generator {
  int id = 0;
  int bus = 0;
  double p0 = 0.0;
  double vset = 1.0;
  MachineParams m;
  AvrParams avr;
  GovParams gov;
  double tg = 5.0;  // AGC time constant
  double qmin = -std::numeric_limits<double>::infinity();
  double qmax = std::numeric_limits<double>::infinity();
  bool online = true;

  /// Frequency response coefficient K = D + 1/R, in pu per Hz.
  double k_qss(double fs) const { return (m.d + 1.0 / gov.r) / fs; }
  friend bool operator==(const Generator&, const Generator&) = default;
};

/// Single-cage induction motor, transient (3rd-order) form.
struct MotorParams {
  double share = 0.0;  // fraction of the load's active power drawn by the motor
  double h = 0.5;
  double rs = 0.01;
  double xs = 0.1;
  double xm = 3.0;
  double rr = 0.02;
  double xr = 0.1;
  double a = 0.0;  // constant share of the mechanical torque; rest is quadratic in speed
  double lf = 0.7;  // loading factor: rated power over motor base

  /// Parameters converted from the motor base to the system base.
  MotorParams to_system_base(double base) const {
    MotorParams m = *this;
    if (!(base > 0)) return m;
    m.rs /= base;
    m.xs /= base;
    m.xm /= base;
    m.rr /= base;
    m.xr /= base;
    m.h *= base;
    return m;
  }

  double x0() const { return xs + xm; }
  double x1() const { return xs + xm * xr / (xm + xr); }
  double t01(double fs) const { return (xr + xm) / (2.0 * std::numbers::pi * fs * rr); }
  friend bool operator==(const MotorParams&, const MotorParams&) = default;
};

/// ZIP load; p and q are consumption at 1 pu voltage and scale 1.
struct Load {
  int id = 0;
  int bus = 0;
  double p = 0.0;
  double q = 0.0;
  double fz = 0.0;
  double fi = 0.0;
  double fp = 1.0;
  double scale = 1.0;
  MotorParams motor;
  bool online = true;

  bool has_motor() const { return motor.share > 0.0; }
  /// Motor on the system base; its own base is share * p / lf.
  MotorParams motor_sys() const { return motor.to_system_base(motor.share * p / motor.lf); }
  friend bool operator==(const Load&, const Load&) = default;
};

enum class EventKind {
  AddBranch,
  CutBranch,
  AddLoad,
  CutLoad,
  AddGen,
  CutGen,
  Fault,
  ClearFault,
  SetLoad,
  SetBranch,
  RampGen,
  RampGenStop,
  RampLoad,
  RampLoadStop,
  Mark,
  Stop,
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::AddBranch: return "ADD_BRANCH";
    case EventKind::CutBranch: return "CUT_BRANCH";
    case EventKind::AddLoad: return "ADD_LOAD";
    case EventKind::CutLoad: return "CUT_LOAD";
    case EventKind::AddGen: return "ADD_GEN";
    case EventKind::CutGen: return "CUT_GEN";
    case EventKind::Fault: return "FAULT";
    case EventKind::ClearFault: return "CLEAR_FAULT";
    case EventKind::SetLoad: return "SET_LOAD";
    case EventKind::SetBranch: return "SET_BRANCH";
    case EventKind::RampGen: return "RAMP_GEN";
    case EventKind::RampGenStop: return "RAMP_GEN_STOP";
    case EventKind::RampLoad: return "RAMP_LOAD";
    case EventKind::RampLoadStop: return "RAMP_LOAD_STOP";
    case EventKind::Mark: return "MARK";
    case EventKind::Stop: return "STOP";
  }
  return "?";
}

inline std::optional<EventKind> event_kind_from_string(const std::string& s) {
  for (int k = 0; k <= static_cast<int>(EventKind::Stop); ++k)
    if (s == to_string(static_cast<EventKind>(k))) return static_cast<EventKind>(k);
  return std::nullopt;
}

/// True for events that instantly change the network or device set and so
/// require an alpha-embedded post-switch solve.
inline bool is_switch(EventKind k) {
  switch (k) {
    case EventKind::AddBranch:
    case EventKind::CutBranch:
    case EventKind::AddLoad:
    case EventKind::CutLoad:
    case EventKind::AddGen:
    case EventKind::CutGen:
    case EventKind::Fault:
    case EventKind::ClearFault:
    case EventKind::SetLoad:
    case EventKind::SetBranch:
      return true;
    default:
      return false;
  }
}

enum class Quantity { BusVoltage, BranchCurrent, Frequency, GenPower, Time };

/// Trigger h >= 0 with h = quantity - value (GE) or value - quantity (LE).
struct Condition {
  Quantity quantity = Quantity::Time;
  int target = 0;
  bool greater = true;
  double value = 0.0;
  friend bool operator==(const Condition&, const Condition&) = default;
};

struct SimEvent {
  EventKind kind = EventKind::Mark;
  std::optional<double> time;
  std::optional<Condition> condition;
  int target = 0;
  std::vector<double> values;
  std::string label;
  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

struct GridCase {
  std::string name = "case";
  double fs = 60.0;
  double sbase = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> gens;
  std::vector<Load> loads;
  std::vector<SimEvent> script;

  double omega_s() const { return 2.0 * std::numbers::pi * fs; }

  template <class V>
  static std::optional<int> find_id(const V& v, int id) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i].id == id) return static_cast<int>(i);
    return std::nullopt;
  }
  int bus_index(int id) const {
    auto i = find_id(buses, id);
    if (!i) throw Error(ErrorKind::ValidationError, "unknown bus " + std::to_string(id));
    return *i;
  }
  int branch_index(int id) const {
    auto i = find_id(branches, id);
    if (!i) throw Error(ErrorKind::ValidationError, "unknown branch " + std::to_string(id));
    return *i;
  }
  int gen_index(int id) const {
    auto i = find_id(gens, id);
    if (!i) throw Error(ErrorKind::ValidationError, "unknown generator " + std::to_string(id));
    return *i;
  }
  int load_index(int id) const {
    auto i = find_id(loads, id);
    if (!i) throw Error(ErrorKind::ValidationError, "unknown load " + std::to_string(id));
    return *i;
  }

  friend bool operator==(const GridCase&, const GridCase&) = default;
};

/// Checks id uniqueness, references and physical ranges.
inline void validate(const GridCase& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::ValidationError, m); };
  auto unique = [&](const auto& v, const char* what) {
    std::set<int> seen;
    for (const auto& e : v)
      if (!seen.insert(e.id).second) fail(std::string("duplicate ") + what + " id " + std::to_string(e.id));
  };
  unique(c.buses, "bus");
  unique(c.branches, "branch");
  unique(c.gens, "generator");
  unique(c.loads, "load");
  if (c.buses.empty()) fail("case has no buses");
  if (!(c.fs > 0)) fail("nominal frequency must be positive");
  auto has_bus = [&](int id) { return GridCase::find_id(c.buses, id).has_value(); };
  for (const auto& b : c.branches) {
    if (!has_bus(b.from)) fail("branch " + std::to_string(b.id) + " references unknown bus " + std::to_string(b.from));
    if (!has_bus(b.to)) fail("branch " + std::to_string(b.id) + " references unknown bus " + std::to_string(b.to));
    if (b.from == b.to) fail("branch " + std::to_string(b.id) + " connects a bus to itself");
    if (!(std::hypot(b.r, b.x) > 0)) fail("branch " + std::to_string(b.id) + " has nonpositive impedance magnitude");
    if (!(b.tap > 0)) fail("branch " + std::to_string(b.id) + " has nonpositive tap");
  }
  std::set<int> gen_buses;
  for (const auto& g : c.gens) {
    const std::string gid = "generator " + std::to_string(g.id);
    if (!has_bus(g.bus)) fail(gid + " references unknown bus " + std::to_string(g.bus));
    if (!gen_buses.insert(g.bus).second) fail(gid + ": only one generator per bus is supported");
    if (c.buses[c.bus_index(g.bus)].type == BusType::Slack) fail(gid + " sits on a slack bus");
    const auto& m = g.m;
    if (!(m.xd1 > 0 && m.xq1 > 0 && m.xd >= m.xd1 && m.xq >= m.xq1)) fail(gid + ": reactances must be positive");
    if (!(m.h > 0)) fail(gid + ": inertia must be positive");
    if (!(m.td01 > 0 && m.tq01 > 0)) fail(gid + ": transient time constants must be positive");
    if (!(g.avr.ka > 0 && g.avr.ta > 0)) fail(gid + ": AVR gain and time constant must be positive");
    if (!(g.gov.r > 0 && g.gov.t1 > 0 && g.gov.t2 > 0)) fail(gid + ": governor parameters must be positive");
    if (!(g.tg > 0)) fail(gid + ": AGC time constant must be positive");
    if (!(g.k_qss(c.fs) >= 0)) fail(gid + ": negative frequency response");
  }
  for (const auto& l : c.loads) {
    const std::string lid = "load " + std::to_string(l.id);
    if (!has_bus(l.bus)) fail(lid + " references unknown bus " + std::to_string(l.bus));
    if (std::abs(l.fz + l.fi + l.fp - 1.0) > 1e-9) fail(lid + ": ZIP fractions must sum to 1");
    if (l.motor.share < 0 || l.motor.share > 1) fail(lid + ": motor share outside [0,1]");
    if (l.has_motor()) {
      const auto& mp = l.motor;
      if (!(mp.h > 0 && mp.xm > 0 && mp.rr > 0 && mp.xs >= 0 && mp.xr >= 0 && mp.rs >= 0 && mp.lf > 0 && l.p > 0))
        fail(lid + ": invalid motor parameters");
    }
  }
  for (const auto& e : c.script) {
    if (!e.time && !e.condition) fail("event without time or condition");
    if (e.time && !std::isfinite(*e.time)) fail("event time must be finite");
    switch (e.kind) {
      case EventKind::AddBranch:
      case EventKind::CutBranch:
      case EventKind::SetBranch:
        c.branch_index(e.target);
        break;
      case EventKind::AddLoad:
      case EventKind::CutLoad:
      case EventKind::SetLoad:
      case EventKind::RampLoad:
      case EventKind::RampLoadStop:
        c.load_index(e.target);
        break;
      case EventKind::AddGen:
      case EventKind::CutGen:
      case EventKind::RampGen:
      case EventKind::RampGenStop:
        c.gen_index(e.target);
        break;
      case EventKind::Fault:
      case EventKind::ClearFault:
        c.bus_index(e.target);
        break;
      default:
        break;
    }
    if (e.kind == EventKind::SetLoad && e.values.size() != 2) fail("SET_LOAD needs values p,q");
    if (e.kind == EventKind::SetBranch && e.values.size() != 2) fail("SET_BRANCH needs values r,x");
    if (e.kind == EventKind::Fault && e.values.size() != 2) fail("FAULT needs values g,b");
    if (e.condition) {
      const auto& cd = *e.condition;
      if (cd.quantity == Quantity::BusVoltage) c.bus_index(cd.target);
      if (cd.quantity == Quantity::BranchCurrent) c.branch_index(cd.target);
      if (cd.quantity == Quantity::GenPower) c.gen_index(cd.target);
    }
  }
}

/// Stamps one branch (pi model, tap on the from side) into Y.
inline void stamp_branch(Eigen::MatrixXcd& y, int f, int t, const Branch& br) {
  const cplx ys = br.series_admittance();
  const cplx ysh(0.0, 0.5 * br.b);
  const double a = br.tap;
  y(f, f) += (ys + ysh) / (a * a);
  y(t, t) += ys + ysh;
  y(f, t) -= ys / a;
  y(t, f) -= ys / a;
}

/// Nodal admittance matrix of the online branches (with the given current
/// parameters) plus bus shunts. Rows follow the case's bus order.
inline Eigen::MatrixXcd build_admittance(const GridCase& c, const std::vector<Branch>& branches) {
  const int n = static_cast<int>(c.buses.size());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) y(i, i) += cplx(c.buses[i].gsh, c.buses[i].bsh);
  for (const auto& br : branches)
    if (br.online) stamp_branch(y, c.bus_index(br.from), c.bus_index(br.to), br);
  return y;
}

inline Eigen::MatrixXcd build_admittance(const GridCase& c, const std::vector<bool>& online_branches) {
  std::vector<Branch> br = c.branches;
  for (std::size_t k = 0; k < br.size(); ++k) br[k].online = online_branches[k];
  return build_admittance(c, br);
}

inline std::vector<bool> branch_status(const GridCase& c) {
  std::vector<bool> on;
  for (const auto& b : c.branches) on.push_back(b.online);
  return on;
}

/// Terminal current of a machine through its Thevenin interface,
/// I = M(delta) Yg^-1 (eps_dq - M(delta)^T V), in network (x, y) axes.
inline cplx machine_injection(const MachineParams& m, double delta, double ed, double eq, cplx v) {
  const double sd = std::sin(delta), cd = std::cos(delta);
  const double vd = v.real() * sd - v.imag() * cd;
  const double vq = v.real() * cd + v.imag() * sd;
  const double det = m.ra * m.ra + m.xd1 * m.xq1;
  const double ad = ed - vd, aq = eq - vq;
  const double id = (m.ra * ad + m.xq1 * aq) / det;
  const double iq = (-m.xd1 * ad + m.ra * aq) / det;
  return {sd * id + cd * iq, -cd * id + sd * iq};
}

/// Steady-state motor input impedance at slip s (equivalent circuit).
inline cplx motor_impedance(const MotorParams& mp, double s) {
  const cplx zm(0.0, mp.xm);
  const cplx zr(mp.rr / s, mp.xr);
  return cplx(mp.rs, mp.xs) + zm * zr / (zm + zr);
}

struct MotorOperatingPoint {
  double slip = 0.0;
  cplx e1;       // transient emf
  cplx current;  // drawn from the bus
  double torque_coeff = 0.0;
};

/// Slip at which the motor draws active power p at terminal voltage v, on the
/// stable side of the torque curve, with the emf that makes it stationary.
inline MotorOperatingPoint motor_operating_point(const MotorParams& mp, cplx v, double p, double fs) {
  auto power = [&](double s) { return std::real(v * std::conj(v / motor_impedance(mp, s))); };
  // Torque peaks near rr / sqrt(rs^2 + (xs + xr)^2); search below it.
  double hi = std::min(1.0, 0.98 * mp.rr / std::hypot(mp.rs, mp.xs + mp.xr));
  double lo = 1e-9;
  if (power(hi) < p)
    throw Error(ErrorKind::PowerFlowInfeasible, "motor cannot draw the requested power at this voltage");
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (power(mid) < p ? lo : hi) = mid;
  }
  MotorOperatingPoint op;
  op.slip = 0.5 * (lo + hi);
  op.current = v / motor_impedance(mp, op.slip);
  op.e1 = v - cplx(mp.rs, mp.x1()) * op.current;
  const double te = std::real(op.e1 * std::conj(op.current));
  const double w = 1.0 - op.slip;
  op.torque_coeff = te / (mp.a + (1.0 - mp.a) * w * w);
  (void)fs;
  return op;
}

/// Stationary motor state at terminal voltage v for a given torque
/// coefficient (electrical torque equals load torque on the stable branch).
inline MotorOperatingPoint motor_steady_state(const MotorParams& mp, cplx v, double torque_coeff) {
  auto state_at = [&](double s) {
    MotorOperatingPoint op;
    op.slip = s;
    op.current = v / motor_impedance(mp, s);
    op.e1 = v - cplx(mp.rs, mp.x1()) * op.current;
    op.torque_coeff = torque_coeff;
    return op;
  };
  auto excess = [&](double s) {
    const auto op = state_at(s);
    const double w = 1.0 - s;
    return std::real(op.e1 * std::conj(op.current)) - torque_coeff * (mp.a + (1.0 - mp.a) * w * w);
  };
  double hi = std::min(1.0, 0.98 * mp.rr / std::hypot(mp.rs, mp.xs + mp.xr));
  double lo = 1e-12;
  if (excess(hi) < 0) throw Error(ErrorKind::Unreachable, "motor stalls at this voltage");
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) < 0 ? lo : hi) = mid;
  }
  return state_at(0.5 * (lo + hi));
}

/// Connected components of the energized network. A bus belongs to an island
/// when it reaches a source (slack bus or online generator) through online
/// branches; other buses get -1.
inline std::vector<int> compute_islands(const GridCase& c, const std::vector<bool>& branch_on,
                                        const std::vector<bool>& gen_on) {
  const int n = static_cast<int>(c.buses.size());
  std::vector<std::vector<int>> adj(n);
  for (std::size_t k = 0; k < c.branches.size(); ++k) {
    if (!branch_on[k]) continue;
    const int f = c.bus_index(c.branches[k].from), t = c.bus_index(c.branches[k].to);
    adj[f].push_back(t);
    adj[t].push_back(f);
  }
  std::vector<bool> source(n, false);
  for (int i = 0; i < n; ++i) source[i] = c.buses[i].type == BusType::Slack;
  for (std::size_t g = 0; g < c.gens.size(); ++g)
    if (gen_on[g]) source[c.bus_index(c.gens[g].bus)] = true;
  std::vector<int> comp(n, -2);
  int next = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] != -2) continue;
    std::vector<int> members{s};
    comp[s] = next;
    bool has_source = false;
    for (std::size_t h = 0; h < members.size(); ++h) {
      const int u = members[h];
      has_source = has_source || source[u];
      for (int w : adj[u])
        if (comp[w] == -2) {
          comp[w] = next;
          members.push_back(w);
        }
    }
    if (has_source) {
      ++next;
    } else {
      for (int u : members) comp[u] = -1;
    }
  }
  return comp;
}

}  // namespace hesim
