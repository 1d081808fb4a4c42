#pragma once

// Text formats. Case files hold one record per line, `KIND key=value ...`,
// with '#' comments; unspecified keys take the documented defaults and the
// writer always emits every key in a fixed order. Trajectory files are CSV
// with a header row and the event log as trailing '#' rows.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hesim/grid.hpp"
#include "hesim/trajectory.hpp"

namespace hesim {

/// Shortest text that parses back to the same double.
inline std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace detail {

inline double parse_double(std::string_view s, bool allow_inf = false) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw std::invalid_argument("bad number '" + std::string(s) + "'");
  if (!std::isfinite(v) && !(allow_inf && std::isinf(v)))
    throw std::invalid_argument("non-finite number '" + std::string(s) + "'");
  return v;
}

inline int parse_int(std::string_view s) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw std::invalid_argument("bad integer '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t a = 0;
  while (true) {
    const std::size_t b = s.find(sep, a);
    out.push_back(s.substr(a, b == std::string_view::npos ? std::string_view::npos : b - a));
    if (b == std::string_view::npos) return out;
    a = b + 1;
  }
}

inline std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

/// Binds record keys to fields for both directions.
class Fields {
 public:
  void num(const char* k, double& v, bool allow_inf = false) { items_.push_back({k, &v, nullptr, nullptr, allow_inf}); }
  void integer(const char* k, int& v) { items_.push_back({k, nullptr, &v, nullptr, false}); }
  void flag(const char* k, bool& v) { items_.push_back({k, nullptr, nullptr, &v, false}); }

  void read(const std::map<std::string, std::string>& kv, std::map<std::string, bool>& used) const {
    for (const auto& it : items_) {
      const auto f = kv.find(it.key);
      if (f == kv.end()) continue;
      used[it.key] = true;
      if (it.d) *it.d = parse_double(f->second, it.allow_inf);
      if (it.i) *it.i = parse_int(f->second);
      if (it.b) {
        if (f->second != "0" && f->second != "1") throw std::invalid_argument(std::string(it.key) + " must be 0 or 1");
        *it.b = f->second == "1";
      }
    }
  }

  std::string write() const {
    std::string out;
    for (const auto& it : items_) {
      out += ' ';
      out += it.key;
      out += '=';
      if (it.d) out += fmt(*it.d);
      if (it.i) out += std::to_string(*it.i);
      if (it.b) out += *it.b ? "1" : "0";
    }
    return out;
  }

 private:
  struct Item {
    const char* key;
    double* d;
    int* i;
    bool* b;
    bool allow_inf;
  };
  std::vector<Item> items_;
};

inline Fields bus_fields(Bus& b) {
  Fields f;
  f.integer("id", b.id);
  f.num("kv", b.base_kv);
  f.num("vm", b.vm);
  f.num("va", b.va);
  f.num("gsh", b.gsh);
  f.num("bsh", b.bsh);
  return f;
}

inline Fields branch_fields(Branch& b) {
  Fields f;
  f.integer("id", b.id);
  f.integer("from", b.from);
  f.integer("to", b.to);
  f.num("r", b.r);
  f.num("x", b.x);
  f.num("b", b.b);
  f.num("tap", b.tap);
  f.flag("status", b.online);
  return f;
}

inline Fields gen_fields(Generator& g) {
  Fields f;
  f.integer("id", g.id);
  f.integer("bus", g.bus);
  f.num("p0", g.p0);
  f.num("vset", g.vset);
  f.num("ra", g.m.ra);
  f.num("xd", g.m.xd);
  f.num("xq", g.m.xq);
  f.num("xd1", g.m.xd1);
  f.num("xq1", g.m.xq1);
  f.num("td01", g.m.td01);
  f.num("tq01", g.m.tq01);
  f.num("h", g.m.h);
  f.num("d", g.m.d);
  f.num("ka", g.avr.ka);
  f.num("ta", g.avr.ta);
  f.num("r", g.gov.r);
  f.num("t1", g.gov.t1);
  f.num("t2", g.gov.t2);
  f.num("tg", g.tg);
  f.num("qmin", g.qmin, true);
  f.num("qmax", g.qmax, true);
  f.flag("status", g.online);
  return f;
}

inline Fields load_fields(Load& l) {
  Fields f;
  f.integer("id", l.id);
  f.integer("bus", l.bus);
  f.num("p", l.p);
  f.num("q", l.q);
  f.num("fz", l.fz);
  f.num("fi", l.fi);
  f.num("fp", l.fp);
  f.num("scale", l.scale);
  f.num("share", l.motor.share);
  f.num("mh", l.motor.h);
  f.num("rs", l.motor.rs);
  f.num("xs", l.motor.xs);
  f.num("xm", l.motor.xm);
  f.num("rr", l.motor.rr);
  f.num("xr", l.motor.xr);
  f.num("a", l.motor.a);
  f.num("lf", l.motor.lf);
  f.flag("status", l.online);
  return f;
}

inline char quantity_code(Quantity q) {
  switch (q) {
    case Quantity::BusVoltage: return 'V';
    case Quantity::BranchCurrent: return 'I';
    case Quantity::Frequency: return 'F';
    case Quantity::GenPower: return 'P';
    case Quantity::Time: return 'T';
  }
  return '?';
}

/// `Q(target)>=value` or `Q(target)<=value`.
inline Condition parse_condition(std::string_view s) {
  Condition c;
  const auto open = s.find('('), close = s.find(')');
  if (s.empty() || open != 1 || close == std::string_view::npos || close + 3 > s.size())
    throw std::invalid_argument("bad condition '" + std::string(s) + "'");
  switch (s[0]) {
    case 'V': c.quantity = Quantity::BusVoltage; break;
    case 'I': c.quantity = Quantity::BranchCurrent; break;
    case 'F': c.quantity = Quantity::Frequency; break;
    case 'P': c.quantity = Quantity::GenPower; break;
    case 'T': c.quantity = Quantity::Time; break;
    default: throw std::invalid_argument("unknown quantity in '" + std::string(s) + "'");
  }
  c.target = parse_int(s.substr(2, close - 2));
  const auto op = s.substr(close + 1, 2);
  if (op != ">=" && op != "<=") throw std::invalid_argument("condition operator must be >= or <=");
  c.greater = op == ">=";
  c.value = parse_double(s.substr(close + 3));
  return c;
}

inline std::string write_condition(const Condition& c) {
  return std::string(1, quantity_code(c.quantity)) + "(" + std::to_string(c.target) + ")" + (c.greater ? ">=" : "<=") +
         fmt(c.value);
}

}  // namespace detail

/// Parses and validates a case. Syntax problems raise ParseError with the
/// line number; semantic problems raise ValidationError.
inline GridCase parse_case(std::string_view text) {
  GridCase c;
  bool header = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    const auto tok = detail::tokens(line);
    if (tok.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": " + why);
    };
    std::map<std::string, std::string> kv;
    for (std::size_t i = 1; i < tok.size(); ++i) {
      const auto eq = tok[i].find('=');
      if (eq == std::string_view::npos || eq == 0) fail("expected key=value, got '" + std::string(tok[i]) + "'");
      if (!kv.emplace(std::string(tok[i].substr(0, eq)), std::string(tok[i].substr(eq + 1))).second)
        fail("duplicate key '" + std::string(tok[i].substr(0, eq)) + "'");
    }
    std::map<std::string, bool> used;
    auto require = [&](std::initializer_list<const char*> keys) {
      for (const char* k : keys)
        if (!kv.count(k)) fail(std::string("missing key '") + k + "'");
    };
    try {
      const std::string kind(tok[0]);
      if (kind == "CASE") {
        if (header) fail("duplicate CASE record");
        header = true;
        if (kv.count("name")) {
          c.name = kv["name"];
          used["name"] = true;
        }
        detail::Fields f;
        f.num("fs", c.fs);
        f.num("sbase", c.sbase);
        f.read(kv, used);
      } else if (kind == "BUS") {
        require({"id"});
        Bus b;
        detail::bus_fields(b).read(kv, used);
        if (kv.count("type")) {
          used["type"] = true;
          if (kv["type"] == "SLACK")
            b.type = BusType::Slack;
          else if (kv["type"] != "PQ")
            fail("bus type must be PQ or SLACK");
        }
        c.buses.push_back(b);
      } else if (kind == "BRANCH") {
        require({"id", "from", "to"});
        Branch b;
        detail::branch_fields(b).read(kv, used);
        c.branches.push_back(b);
      } else if (kind == "GEN") {
        require({"id", "bus"});
        Generator g;
        detail::gen_fields(g).read(kv, used);
        c.gens.push_back(g);
      } else if (kind == "LOAD") {
        require({"id", "bus"});
        Load l;
        detail::load_fields(l).read(kv, used);
        c.loads.push_back(l);
      } else if (kind == "EVENT") {
        require({"kind"});
        SimEvent e;
        const auto k = event_kind_from_string(kv["kind"]);
        if (!k) fail("unknown event kind '" + kv["kind"] + "'");
        e.kind = *k;
        used["kind"] = true;
        if (kv.count("at") == kv.count("when")) fail("event needs exactly one of at= or when=");
        if (kv.count("at")) {
          e.time = detail::parse_double(kv["at"]);
          used["at"] = true;
        } else {
          e.condition = detail::parse_condition(kv["when"]);
          used["when"] = true;
        }
        if (kv.count("target")) {
          e.target = detail::parse_int(kv["target"]);
          used["target"] = true;
        }
        if (kv.count("values")) {
          for (auto v : detail::split(kv["values"], ',')) e.values.push_back(detail::parse_double(v));
          used["values"] = true;
        }
        if (kv.count("label")) {
          e.label = kv["label"];
          used["label"] = true;
        }
        c.script.push_back(e);
      } else {
        fail("unknown record '" + kind + "'");
      }
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ParseError) throw;
      fail(e.what());
    }
    for (const auto& [k, v] : kv)
      if (!used.count(k)) fail("unknown key '" + k + "' for " + std::string(tok[0]));
  }
  if (!header && c.buses.empty()) throw Error(ErrorKind::ParseError, "line 1: empty case");
  validate(c);
  return c;
}

inline std::string write_case(const GridCase& c0) {
  GridCase c = c0;
  std::string out = "CASE name=" + c.name + " fs=" + fmt(c.fs) + " sbase=" + fmt(c.sbase) + "\n";
  for (auto& b : c.buses)
    out += "BUS" + detail::bus_fields(b).write() + (b.type == BusType::Slack ? " type=SLACK" : " type=PQ") + "\n";
  for (auto& b : c.branches) out += "BRANCH" + detail::branch_fields(b).write() + "\n";
  for (auto& g : c.gens) out += "GEN" + detail::gen_fields(g).write() + "\n";
  for (auto& l : c.loads) out += "LOAD" + detail::load_fields(l).write() + "\n";
  for (const auto& e : c.script) {
    out += "EVENT";
    out += e.time ? " at=" + fmt(*e.time) : " when=" + detail::write_condition(*e.condition);
    out += std::string(" kind=") + to_string(e.kind) + " target=" + std::to_string(e.target);
    if (!e.values.empty()) {
      out += " values=";
      for (std::size_t i = 0; i < e.values.size(); ++i) out += (i ? "," : "") + fmt(e.values[i]);
    }
    if (!e.label.empty()) out += " label=" + e.label;
    out += "\n";
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::ValidationError, "cannot write " + path);
  out << text;
}

// ---- Trajectory files --------------------------------------------------------

struct TrajectoryTable {
  std::vector<std::string> columns;  // after t and mode
  std::vector<double> t;
  std::vector<std::string> mode;
  std::vector<std::vector<double>> values;
  std::vector<EventRecord> events;

  friend bool operator==(const TrajectoryTable& a, const TrajectoryTable& b) {
    if (a.events.size() != b.events.size()) return false;
    for (std::size_t i = 0; i < a.events.size(); ++i) {
      const auto &x = a.events[i], &y = b.events[i];
      if (x.t != y.t || x.kind != y.kind || x.target != y.target || x.label != y.label) return false;
    }
    return a.columns == b.columns && a.t == b.t && a.mode == b.mode && a.values == b.values;
  }
};

/// Output columns for a case: system frequency, bus voltage magnitudes and
/// angles (degrees), generator P and Q.
inline std::vector<std::string> trajectory_columns(const GridCase& c) {
  std::vector<std::string> cols{"f"};
  for (const auto& b : c.buses) cols.push_back("vm_" + std::to_string(b.id));
  for (const auto& b : c.buses) cols.push_back("va_" + std::to_string(b.id));
  for (const auto& g : c.gens) cols.push_back("pg_" + std::to_string(g.id));
  for (const auto& g : c.gens) cols.push_back("qg_" + std::to_string(g.id));
  return cols;
}

inline std::vector<double> trajectory_row(const GridCase& c, const SimState& st) {
  std::vector<double> r{system_frequency(c, st)};
  for (std::size_t b = 0; b < c.buses.size(); ++b) r.push_back(std::abs(st.v[b]));
  for (std::size_t b = 0; b < c.buses.size(); ++b) r.push_back(std::arg(st.v[b]) * 180.0 / std::numbers::pi);
  for (std::size_t g = 0; g < c.gens.size(); ++g) r.push_back(gen_power(c, st, static_cast<int>(g)).real());
  for (std::size_t g = 0; g < c.gens.size(); ++g) r.push_back(gen_power(c, st, static_cast<int>(g)).imag());
  return r;
}

/// Samples the analytic segments at multiples of dt and at the final time.
inline TrajectoryTable sample_trajectory(const GridCase& c, const Trajectory& tr, double dt) {
  TrajectoryTable tab;
  tab.columns = trajectory_columns(c);
  tab.events = tr.events;
  if (tr.segments.empty()) return tab;
  const double t_last = tr.segments.back().t0 + tr.segments.back().span;
  std::vector<double> times;
  for (long k = 0; k * dt < t_last - 1e-9; ++k) times.push_back(k * dt);
  times.push_back(t_last);
  for (double t : times) {
    const auto st = state_at(c, tr, t);
    tab.t.push_back(t);
    tab.mode.push_back(to_string(tr.segments[segment_index(tr, t)].mode));
    tab.values.push_back(trajectory_row(c, st));
  }
  return tab;
}

inline std::string write_trajectory(const TrajectoryTable& tab) {
  std::string out = "t,mode";
  for (const auto& c : tab.columns) out += "," + c;
  out += "\n";
  for (std::size_t i = 0; i < tab.t.size(); ++i) {
    out += fmt(tab.t[i]) + "," + tab.mode[i];
    for (double v : tab.values[i]) out += "," + fmt(v);
    out += "\n";
  }
  for (const auto& e : tab.events)
    out += "# event," + fmt(e.t) + "," + e.kind + "," + std::to_string(e.target) + "," + e.label + "\n";
  return out;
}

inline TrajectoryTable parse_trajectory(std::string_view text) {
  TrajectoryTable tab;
  int line_no = 0;
  bool header = false;
  for (auto line : detail::split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": " + why);
    };
    try {
      if (line.starts_with("# event,")) {
        const auto f = detail::split(line.substr(8), ',');
        if (f.size() != 4) fail("event row needs 4 fields");
        tab.events.push_back({detail::parse_double(f[0]), std::string(f[1]), detail::parse_int(f[2]), std::string(f[3])});
        continue;
      }
      if (line.starts_with("#")) continue;
      const auto f = detail::split(line, ',');
      if (!header) {
        if (f.size() < 2 || f[0] != "t" || f[1] != "mode") fail("header must start with t,mode");
        for (std::size_t i = 2; i < f.size(); ++i) tab.columns.emplace_back(f[i]);
        header = true;
        continue;
      }
      if (f.size() != tab.columns.size() + 2) fail("column count mismatch");
      const double t = detail::parse_double(f[0]);
      if (!tab.t.empty() && !(t > tab.t.back())) fail("times must be strictly increasing");
      tab.t.push_back(t);
      tab.mode.emplace_back(f[1]);
      std::vector<double> row;
      for (std::size_t i = 2; i < f.size(); ++i) row.push_back(detail::parse_double(f[i]));
      tab.values.push_back(std::move(row));
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
  if (!header) throw Error(ErrorKind::ParseError, "line 1: missing header");
  return tab;
}

}  // namespace hesim
