#pragma once

// Built-in cases. The 4-bus network data and load mix are repository-defined
// (only the governor, AGC and dispatch values are published); the 39-bus case
// uses the standard New England network with a scripted restoration.

#include <string>
#include <vector>

#include "hesim/errors.hpp"
#include "hesim/grid.hpp"

namespace hesim::builtin {

inline SimEvent timed(double t, EventKind k, int target, std::vector<double> values = {}, std::string label = {}) {
  SimEvent e;
  e.kind = k;
  e.time = t;
  e.target = target;
  e.values = std::move(values);
  e.label = std::move(label);
  return e;
}

/// Source E = 1.01 behind z = 0.01 + j0.05 feeding P + jQ = 0.1 + j0.3
/// scaled by lambda(t) = t. A conditional MARK records the line current
/// reaching 3 pu.
inline GridCase twobus() {
  GridCase c;
  c.name = "twobus";
  c.buses = {{1, 230, 1.01, 0.0, BusType::Slack}, {2, 230, 1.0, 0.0}};
  c.branches = {{1, 1, 2, 0.01, 0.05, 0.0}};
  Load l;
  l.id = 1;
  l.bus = 2;
  l.p = 0.1;
  l.q = 0.3;
  l.scale = 0.0;
  c.loads = {l};
  SimEvent mark;
  mark.kind = EventKind::Mark;
  mark.condition = Condition{Quantity::BranchCurrent, 1, true, 3.0};
  mark.label = "i_th";
  c.script = {timed(0.0, EventKind::RampLoad, 1, {1.0}), mark, timed(15.0, EventKind::Stop, 0)};
  return c;
}

/// Single machine on two parallel lines to an infinite bus; one line trips
/// at t = 1 s.
inline GridCase smib() {
  GridCase c;
  c.name = "smib";
  c.buses = {{1, 20, 1.0, 0.0}, {2, 230, 1.0, 0.0, BusType::Slack}};
  c.branches = {{1, 1, 2, 0.005, 0.2, 0.02}, {2, 1, 2, 0.005, 0.2, 0.02}};
  Generator g;
  g.id = 1;
  g.bus = 1;
  g.p0 = 0.8;
  g.vset = 1.02;
  c.gens = {g};
  c.script = {timed(1.0, EventKind::CutBranch, 2), timed(10.0, EventKind::Stop, 0)};
  return c;
}

/// Two generators (buses 1 and 4) dispatched at 1.1436 pu, ZIP plus motor
/// load at every bus, and switchable blocks at buses 2 and 3 added and cut
/// alternately every 30 s over 500 s.
inline GridCase fourbus() {
  GridCase c;
  c.name = "fourbus";
  for (int b = 1; b <= 4; ++b) c.buses.push_back({b, 230, 1.0, 0.0});
  c.branches = {{1, 1, 2, 0.01, 0.08, 0.05},
                {2, 1, 3, 0.015, 0.1, 0.06},
                {3, 2, 4, 0.015, 0.1, 0.06},
                {4, 3, 4, 0.01, 0.08, 0.05},
                {5, 2, 3, 0.02, 0.15, 0.03}};
  for (int k = 0; k < 2; ++k) {
    Generator g;
    g.id = k + 1;
    g.bus = k == 0 ? 1 : 4;
    g.p0 = 1.1436;
    g.vset = k == 0 ? 1.03 : 1.02;
    g.gov = {0.05, 0.3, 0.1};
    g.tg = 5.0;
    c.gens.push_back(g);
  }
  const double pl[] = {0.3, 0.8, 0.8, 0.35};
  const double ql[] = {0.1, 0.25, 0.25, 0.1};
  for (int b = 0; b < 4; ++b) {
    Load l;
    l.id = b + 1;
    l.bus = b + 1;
    l.p = pl[b];
    l.q = ql[b];
    l.fz = 0.3;
    l.fi = 0.3;
    l.fp = 0.4;
    l.motor.share = 0.2;
    c.loads.push_back(l);
  }
  for (int k = 0; k < 2; ++k) {
    Load l;
    l.id = 5 + k;
    l.bus = 2 + k;
    l.p = 0.1;
    l.q = 0.03;
    l.fz = 0.3;
    l.fi = 0.3;
    l.fp = 0.4;
    l.motor.share = 0.3;
    l.online = false;
    c.loads.push_back(l);
  }
  // add 5, add 6, cut 5, cut 6, repeated.
  for (int k = 1; 30.0 * k < 500.0; ++k) {
    const bool add = ((k - 1) / 2) % 2 == 0;
    const int target = (k - 1) % 2 == 0 ? 5 : 6;
    c.script.push_back(timed(30.0 * k, add ? EventKind::AddLoad : EventKind::CutLoad, target));
  }
  c.script.push_back(timed(500.0, EventKind::Stop, 0));
  return c;
}

/// Generator with typical machine data on its own rating `s` (system pu)
/// converted to the system base.
inline Generator rated_generator(int id, int bus, double s, double vset) {
  Generator g;
  g.id = id;
  g.bus = bus;
  g.vset = vset;
  g.m.xd /= s;
  g.m.xq /= s;
  g.m.xd1 /= s;
  g.m.xq1 /= s;
  g.m.ra /= s;
  g.m.h *= s;
  g.m.d *= s;
  g.gov.r /= s;
  return g;
}

/// New England 39-bus network starting black except generator 30, followed
/// by a scripted restoration: energize lines, pick up ZIP plus motor load
/// blocks (a quarter of the nominal bus load), synchronize units and ramp
/// their output.
inline GridCase ne39() {
  GridCase c;
  c.name = "ne39";
  for (int b = 1; b <= 39; ++b) c.buses.push_back({b, 345, 1.0, 0.0});
  struct Br {
    int f, t;
    double r, x, b, tap;
  };
  const Br br[] = {{1, 2, 0.0035, 0.0411, 0.6987, 1},   {1, 39, 0.001, 0.025, 0.75, 1},
                   {2, 3, 0.0013, 0.0151, 0.2572, 1},   {2, 25, 0.007, 0.0086, 0.146, 1},
                   {2, 30, 0, 0.0181, 0, 1.025},        {3, 4, 0.0013, 0.0213, 0.2214, 1},
                   {3, 18, 0.0011, 0.0133, 0.2138, 1},  {4, 5, 0.0008, 0.0128, 0.1342, 1},
                   {4, 14, 0.0008, 0.0129, 0.1382, 1},  {5, 6, 0.0002, 0.0026, 0.0434, 1},
                   {5, 8, 0.0008, 0.0112, 0.1476, 1},   {6, 7, 0.0006, 0.0092, 0.113, 1},
                   {6, 11, 0.0007, 0.0082, 0.1389, 1},  {6, 31, 0, 0.025, 0, 1.07},
                   {7, 8, 0.0004, 0.0046, 0.078, 1},    {8, 9, 0.0023, 0.0363, 0.3804, 1},
                   {9, 39, 0.001, 0.025, 1.2, 1},       {10, 11, 0.0004, 0.0043, 0.0729, 1},
                   {10, 13, 0.0004, 0.0043, 0.0729, 1}, {10, 32, 0, 0.02, 0, 1.07},
                   {12, 11, 0.0016, 0.0435, 0, 1.006},  {12, 13, 0.0016, 0.0435, 0, 1.006},
                   {13, 14, 0.0009, 0.0101, 0.1723, 1}, {14, 15, 0.0018, 0.0217, 0.366, 1},
                   {15, 16, 0.0009, 0.0094, 0.171, 1},  {16, 17, 0.0007, 0.0089, 0.1342, 1},
                   {16, 19, 0.0016, 0.0195, 0.304, 1},  {16, 21, 0.0008, 0.0135, 0.2548, 1},
                   {16, 24, 0.0003, 0.0059, 0.068, 1},  {17, 18, 0.0007, 0.0082, 0.1319, 1},
                   {17, 27, 0.0013, 0.0173, 0.3216, 1}, {19, 20, 0.0007, 0.0138, 0, 1.06},
                   {19, 33, 0.0007, 0.0142, 0, 1.07},   {20, 34, 0.0009, 0.018, 0, 1.009},
                   {21, 22, 0.0008, 0.014, 0.2565, 1},  {22, 23, 0.0006, 0.0096, 0.1846, 1},
                   {22, 35, 0, 0.0143, 0, 1.025},       {23, 24, 0.0022, 0.035, 0.361, 1},
                   {23, 36, 0.0005, 0.0272, 0, 1},      {25, 26, 0.0032, 0.0323, 0.531, 1},
                   {25, 37, 0.0006, 0.0232, 0, 1.025},  {26, 27, 0.0014, 0.0147, 0.2396, 1},
                   {26, 28, 0.0043, 0.0474, 0.7802, 1}, {26, 29, 0.0057, 0.0625, 1.029, 1},
                   {28, 29, 0.0014, 0.0151, 0.249, 1},  {29, 38, 0.0008, 0.0156, 0, 1.025}};
  int id = 1;
  for (const auto& b : br) {
    Branch x{id++, b.f, b.t, b.r, b.x, b.b, b.tap};
    x.online = false;
    c.branches.push_back(x);
  }
  struct Gd {
    int bus;
    double pmax, vset;
  };
  const Gd gd[] = {{30, 10.4, 1.0499}, {31, 6.46, 0.982},  {32, 7.25, 0.9841}, {33, 6.52, 0.9972},
                   {34, 5.08, 1.0123}, {35, 6.87, 1.0494}, {36, 5.8, 1.0636},  {37, 5.64, 1.0275},
                   {38, 8.65, 1.0265}, {39, 11.0, 1.03}};
  for (const auto& g : gd) {
    auto gen = rated_generator(g.bus, g.bus, g.pmax / 0.9, g.vset);
    gen.online = g.bus == 30;
    c.gens.push_back(gen);
  }
  struct Ld {
    int bus;
    double p, q;
  };
  const Ld ld[] = {{1, 0.976, 0.442}, {3, 3.22, 0.024},  {4, 5.0, 1.84},    {7, 2.338, 0.84},  {8, 5.22, 1.766},
                   {9, 0.065, -0.666}, {12, 0.0853, 0.88}, {15, 3.2, 1.53},  {16, 3.29, 0.323}, {18, 1.58, 0.3},
                   {20, 6.8, 1.03},   {21, 2.74, 1.15},  {23, 2.475, 0.846}, {24, 3.086, -0.922}, {25, 2.24, 0.472},
                   {26, 1.39, 0.17},  {27, 2.81, 0.755}, {28, 2.06, 0.276}, {29, 2.835, 0.269}, {31, 0.092, 0.046},
                   {39, 11.04, 2.5}};
  for (const auto& l : ld) {
    Load x;
    x.id = l.bus;
    x.bus = l.bus;
    x.p = 0.25 * l.p;
    x.q = 0.25 * l.q;
    x.fz = 0.3;
    x.fi = 0.3;
    x.fp = 0.4;
    x.motor.share = x.p > 0.2 ? 0.2 : 0.0;
    x.online = false;
    c.loads.push_back(x);
  }
  auto branch = [&](int f, int t) {
    for (const auto& b : c.branches)
      if ((b.from == f && b.to == t) || (b.from == t && b.to == f)) return b.id;
    return -1;
  };
  auto& s = c.script;
  double t = 10.0;
  auto next = [&](double dt = 15.0) {
    const double now = t;
    t += dt;
    return now;
  };
  auto energize = [&](int f, int to) { s.push_back(timed(next(), EventKind::AddBranch, branch(f, to))); };
  auto pick_up = [&](int bus) { s.push_back(timed(next(), EventKind::AddLoad, bus)); };
  auto unit = [&](int bus) {
    s.push_back(timed(next(5.0), EventKind::AddGen, bus));
    s.push_back(timed(next(), EventKind::RampGen, bus, {0.02}));
  };
  auto stop_ramp = [&](int bus) { s.push_back(timed(next(), EventKind::RampGenStop, bus)); };
  energize(2, 30);
  energize(2, 3);
  pick_up(3);
  energize(2, 25);
  energize(25, 37);
  unit(37);
  pick_up(25);
  stop_ramp(37);
  energize(3, 4);
  pick_up(4);
  energize(4, 5);
  energize(5, 6);
  energize(6, 31);
  unit(31);
  energize(6, 7);
  pick_up(7);
  stop_ramp(31);
  energize(25, 26);
  pick_up(26);
  energize(26, 28);
  energize(28, 29);
  energize(29, 38);
  unit(38);
  pick_up(28);
  pick_up(29);
  stop_ramp(38);
  energize(3, 18);
  pick_up(18);
  energize(6, 11);
  energize(10, 11);
  energize(10, 32);
  unit(32);
  energize(7, 8);
  pick_up(8);
  stop_ramp(32);
  s.push_back(timed(t + 15.0, EventKind::Stop, 0));
  return c;
}

inline const std::vector<std::string>& names() {
  static const std::vector<std::string> n{"twobus", "smib", "fourbus", "ne39"};
  return n;
}

inline GridCase by_name(const std::string& name) {
  if (name == "twobus") return twobus();
  if (name == "smib") return smib();
  if (name == "fourbus") return fourbus();
  if (name == "ne39") return ne39();
  throw Error(ErrorKind::ValidationError, "unknown built-in case " + name);
}

}  // namespace hesim::builtin
