#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "gridsynth/error.hpp"
#include "gridsynth/gridio.hpp"
#include "gridsynth/util.hpp"

namespace gridsynth {

namespace {

std::string terminals(std::uint8_t mask) {
  std::string t;
  for (int c = 0; c < 3; ++c) {
    if ((mask >> c) & 1u) t += "." + std::to_string(c + 1);
  }
  return t;
}

int mask_count(std::uint8_t mask) { return (mask & 1) + ((mask >> 1) & 1) + ((mask >> 2) & 1); }

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  fail(Errc::MalformedStatement, "line " + std::to_string(line) + ": " + what);
}

/// "new <class>.<id> key=value ..." with parenthesised lists kept as one value.
struct Statement {
  std::string cls;
  std::string id;
  std::map<std::string, std::string> kv;
  std::vector<std::string> keys;  // in source order
};

Statement tokenize(std::string_view line, std::size_t line_no) {
  Statement st;
  std::vector<std::string> tokens;
  std::string cur;
  int depth = 0;
  for (char ch : line) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (depth < 0) malformed(line_no, "unbalanced parenthesis");
    if (ch == ' ' && depth == 0) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (depth != 0) malformed(line_no, "unbalanced parenthesis");
  if (!cur.empty()) tokens.push_back(std::move(cur));
  if (tokens.size() < 2 || tokens[0] != "new") {
    fail(Errc::UnsupportedStatement, "line " + std::to_string(line_no) + ": only 'new' statements are supported");
  }
  const auto dot = tokens[1].find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == tokens[1].size()) {
    malformed(line_no, "expected <class>.<name>");
  }
  st.cls = tokens[1].substr(0, dot);
  st.id = tokens[1].substr(dot + 1);
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string::npos || eq == 0) malformed(line_no, "expected key=value, found '" + tokens[i] + "'");
    auto key = tokens[i].substr(0, eq);
    if (st.kv.contains(key)) malformed(line_no, "duplicate key '" + key + "'");
    st.keys.push_back(key);
    st.kv.emplace(std::move(key), tokens[i].substr(eq + 1));
  }
  return st;
}

const std::string& need(const Statement& st, const std::string& key, std::size_t line_no) {
  auto it = st.kv.find(key);
  if (it == st.kv.end()) malformed(line_no, "missing '" + key + "'");
  return it->second;
}

void expect_keys(const Statement& st, std::initializer_list<const char*> keys, std::size_t line_no) {
  std::vector<std::string> want(keys.begin(), keys.end());
  if (st.keys != want) {
    std::string list;
    for (const auto& k : want) list += (list.empty() ? "" : " ") + k;
    malformed(line_no, "expected keys in order: " + list);
  }
}

double num(const std::string& text, std::size_t line_no, const std::string& key) {
  bool ok = false;
  const double v = parse_double(text, &ok);
  if (!ok || !std::isfinite(v)) malformed(line_no, key + "=" + text + " is not a number");
  return v;
}

std::pair<std::string, std::string> pair_list(const std::string& text, std::size_t line_no, const std::string& key) {
  if (text.size() < 2 || text.front() != '(' || text.back() != ')') malformed(line_no, key + " must be (a, b)");
  const auto inner = std::string_view(text).substr(1, text.size() - 2);
  const auto parts = split(inner, ',');
  if (parts.size() != 2) malformed(line_no, key + " must list two values");
  return {std::string(trim(parts[0])), std::string(trim(parts[1]))};
}

/// bus.1.2 -> ("bus", mask)
std::pair<std::string, std::uint8_t> bus_terminals(const std::string& text, std::size_t line_no) {
  const auto parts = split(text, '.');
  if (parts.size() < 2 || parts[0].empty()) malformed(line_no, "bus '" + text + "' needs terminals");
  std::uint8_t mask = 0;
  int last = 0;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i].size() != 1 || parts[i][0] < '1' || parts[i][0] > '3') malformed(line_no, "bad terminal in " + text);
    const int t = parts[i][0] - '0';
    if (t <= last) malformed(line_no, "terminals must be ascending in " + text);
    last = t;
    mask |= static_cast<std::uint8_t>(1u << (t - 1));
  }
  return {std::string(parts[0]), mask};
}

}  // namespace

std::vector<std::string> DssCircuit::buses() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add = [&](const std::string& b) {
    if (seen.insert(b).second) out.push_back(b);
  };
  add("sourcebus");
  for (const auto& t : transformers) {
    add(t.hv_bus);
    add(t.lv_bus);
  }
  for (const auto& l : lines) {
    add(l.bus1);
    add(l.bus2);
  }
  for (const auto& l : loads) add(l.bus);
  return out;
}

DssCircuit build_dss_circuit(const GridSample& sample, const GridTopology& topo) {
  if (sample.buses.size() != topo.buses.size() || sample.lines.size() != topo.branches.size()) {
    fail(Errc::HashMismatch, "sample does not match the topology");
  }
  const auto& tl = topo.transmission;
  DssCircuit c;
  c.name = topo.name;
  c.basekv = tl.hv_buses.empty() ? topo.buses[topo.feeders.front().source_bus].voltage_kv
                                 : tl.hv_buses[tl.external_source].voltage_kv;
  for (const auto& g : tl.grid_transformers) {
    const auto& hv = tl.hv_buses[g.hv_bus];
    const auto& sub = topo.buses[g.substation_bus];
    c.transformers.push_back({g.id, hv.id, sub.id, hv.voltage_kv, sub.voltage_kv, g.rating_mva * 1000.0, g.vk_percent});
  }
  for (const auto& t : topo.transformers) {
    const auto& hv = topo.buses[t.hv_bus];
    const auto& lv = topo.buses[t.lv_bus];
    c.transformers.push_back({t.id, hv.id, lv.id, hv.voltage_kv, lv.voltage_kv, t.rating_kva, t.vk_percent});
  }
  for (const auto& l : tl.hv_lines) {
    c.lines.push_back({l.id, tl.hv_buses[l.from].id, tl.hv_buses[l.to].id, 7, l.r_ohm_per_km * l.length_km,
                       l.x_ohm_per_km * l.length_km, l.length_km});
  }
  for (std::size_t i = 0; i < topo.branches.size(); ++i) {
    const auto& br = topo.branches[i];
    c.lines.push_back({br.id, topo.buses[br.from].id, topo.buses[br.to].id, conductor_mask(sample.buses[br.to].phase),
                       sample.lines[i].r1_ohm, sample.lines[i].x1_ohm, br.length_km});
  }
  static constexpr char letter[] = {'a', 'b', 'c'};
  for (std::size_t b = 0; b < topo.buses.size(); ++b) {
    if (!topo.buses[b].load_point) continue;
    const auto& st = sample.buses[b];
    for (int k = 0; k < 3; ++k) {
      if (!has_conductor(st.phase, k)) continue;
      c.loads.push_back({topo.buses[b].id + "_" + letter[k], topo.buses[b].id, k + 1,
                         topo.buses[b].voltage_kv / std::sqrt(3.0), st.p_kw[k], st.q_kvar[k]});
    }
  }
  return c;
}

std::string render_dss(const DssCircuit& c) {
  auto f = [](double v) { return format_sig(v, 6); };
  std::string out = "new circuit." + c.name + " basekv=" + f(c.basekv) + " pu=1.0 bus1=sourcebus\n";
  for (const auto& t : c.transformers) {
    out += "new transformer." + t.id + " phases=3 windings=2 buses=(" + t.hv_bus + ", " + t.lv_bus + ") kvs=(" +
           f(t.kv_hv) + ", " + f(t.kv_lv) + ") kvas=(" + f(t.kva) + ", " + f(t.kva) + ") xhl=" + f(t.xhl) + "\n";
  }
  for (const auto& l : c.lines) {
    const auto t = terminals(l.terminals);
    out += "new line." + l.id + " bus1=" + l.bus1 + t + " bus2=" + l.bus2 + t + " r1=" + f(l.r1_ohm) + " x1=" +
           f(l.x1_ohm) + " length=" + f(l.length_km) + " units=km phases=" + std::to_string(mask_count(l.terminals)) +
           "\n";
  }
  for (const auto& l : c.loads) {
    out += "new load." + l.id + " bus1=" + l.bus + "." + std::to_string(l.terminal) + " phases=1 kv=" + f(l.kv) +
           " kw=" + f(l.kw) + " kvar=" + f(l.kvar) + " model=1\n";
  }
  return out;
}

DssCircuit parse_dss(std::string_view text) {
  DssCircuit c;
  bool have_circuit = false;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.starts_with('!') || line.starts_with("//")) continue;
    const auto st = tokenize(line, line_no);
    if (st.cls == "circuit") {
      if (have_circuit) malformed(line_no, "second circuit header");
      expect_keys(st, {"basekv", "pu", "bus1"}, line_no);
      if (need(st, "bus1", line_no) != "sourcebus") malformed(line_no, "circuit must start at sourcebus");
      num(need(st, "pu", line_no), line_no, "pu");
      c.name = st.id;
      c.basekv = num(need(st, "basekv", line_no), line_no, "basekv");
      have_circuit = true;
      continue;
    }
    if (!have_circuit) malformed(line_no, "statement before the circuit header");
    if (st.cls == "transformer") {
      expect_keys(st, {"phases", "windings", "buses", "kvs", "kvas", "xhl"}, line_no);
      if (need(st, "phases", line_no) != "3" || need(st, "windings", line_no) != "2") {
        malformed(line_no, "transformers must be 3-phase, 2-winding");
      }
      DssTransformer t;
      t.id = st.id;
      std::tie(t.hv_bus, t.lv_bus) = pair_list(need(st, "buses", line_no), line_no, "buses");
      const auto kvs = pair_list(need(st, "kvs", line_no), line_no, "kvs");
      t.kv_hv = num(kvs.first, line_no, "kvs");
      t.kv_lv = num(kvs.second, line_no, "kvs");
      const auto kvas = pair_list(need(st, "kvas", line_no), line_no, "kvas");
      t.kva = num(kvas.first, line_no, "kvas");
      if (num(kvas.second, line_no, "kvas") != t.kva) malformed(line_no, "winding ratings must match");
      t.xhl = num(need(st, "xhl", line_no), line_no, "xhl");
      c.transformers.push_back(std::move(t));
    } else if (st.cls == "line") {
      expect_keys(st, {"bus1", "bus2", "r1", "x1", "length", "units", "phases"}, line_no);
      DssLine l;
      l.id = st.id;
      std::uint8_t m2 = 0;
      std::tie(l.bus1, l.terminals) = bus_terminals(need(st, "bus1", line_no), line_no);
      std::tie(l.bus2, m2) = bus_terminals(need(st, "bus2", line_no), line_no);
      if (m2 != l.terminals) malformed(line_no, "line ends use different terminals");
      l.r1_ohm = num(need(st, "r1", line_no), line_no, "r1");
      l.x1_ohm = num(need(st, "x1", line_no), line_no, "x1");
      l.length_km = num(need(st, "length", line_no), line_no, "length");
      if (need(st, "units", line_no) != "km") malformed(line_no, "units must be km");
      if (need(st, "phases", line_no) != std::to_string(mask_count(l.terminals))) {
        malformed(line_no, "phases does not match terminal count");
      }
      c.lines.push_back(std::move(l));
    } else if (st.cls == "load") {
      expect_keys(st, {"bus1", "phases", "kv", "kw", "kvar", "model"}, line_no);
      DssLoad l;
      l.id = st.id;
      const auto [bus, mask] = bus_terminals(need(st, "bus1", line_no), line_no);
      if (mask_count(mask) != 1) malformed(line_no, "loads connect to exactly one terminal");
      l.bus = bus;
      l.terminal = mask == 1 ? 1 : (mask == 2 ? 2 : 3);
      if (need(st, "phases", line_no) != "1") malformed(line_no, "loads must be single-phase");
      if (need(st, "model", line_no) != "1") malformed(line_no, "only constant-power loads (model=1)");
      l.kv = num(need(st, "kv", line_no), line_no, "kv");
      l.kw = num(need(st, "kw", line_no), line_no, "kw");
      l.kvar = num(need(st, "kvar", line_no), line_no, "kvar");
      c.loads.push_back(std::move(l));
    } else {
      fail(Errc::UnsupportedStatement, "line " + std::to_string(line_no) + ": unsupported element '" + st.cls + "'");
    }
  }
  if (!have_circuit) fail(Errc::MalformedStatement, "line 0: no circuit header");
  return c;
}

std::string write_opendss(const GridSample& sample, const GridTopology& topo, const std::string& out_dir) {
  const auto path = (std::filesystem::path(out_dir) / "master.dss").string();
  write_file(path, render_dss(build_dss_circuit(sample, topo)));
  return path;
}

DssCircuit parse_opendss(const std::string& dir) {
  return parse_dss(read_file(std::filesystem::path(dir) / "master.dss"));
}

}  // namespace gridsynth
