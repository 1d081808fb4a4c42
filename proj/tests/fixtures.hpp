#pragma once

#include "hesim/grid.hpp"

namespace hesim::testing_fixtures {

// Meshed three-bus system with a radial fourth bus that starts disconnected.
inline GridCase four_bus() {
  GridCase c;
  c.name = "sw";
  c.buses = {{1, 230, 1.0, 0.0}, {2, 230, 1.0, 0.0}, {3, 230, 1.0, 0.0}, {4, 230, 1.0, 0.0}};
  c.buses[3].gsh = 0.01;
  c.branches = {{1, 1, 2, 0.01, 0.1, 0.02},
                {2, 2, 3, 0.02, 0.12, 0.02, 1.05},
                {3, 1, 3, 0.01, 0.15, 0.0},
                {4, 2, 4, 0.01, 0.08, 0.04}};
  c.branches[3].online = false;
  Generator g1;
  g1.id = 1;
  g1.bus = 1;
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
  Load l2;
  l2.id = 2;
  l2.bus = 3;
  l2.p = 0.3;
  l2.q = 0.1;
  c.loads = {l, l2};
  return c;
}

inline SimEvent ev(EventKind k, int target, std::vector<double> values = {}) {
  SimEvent e;
  e.kind = k;
  e.target = target;
  e.values = std::move(values);
  return e;
}

}  // namespace hesim::testing_fixtures
