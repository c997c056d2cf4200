#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridsynth/phase.hpp"
#include "gridsynth/synthesis.hpp"
#include "gridsynth/topology.hpp"

namespace gridsynth {

// --- DSS circuit text -------------------------------------------------------

struct DssTransformer {
  std::string id;
  std::string hv_bus;
  std::string lv_bus;
  double kv_hv = 0.0;
  double kv_lv = 0.0;
  double kva = 0.0;
  double xhl = 0.0;
};

struct DssLine {
  std::string id;
  std::string bus1;
  std::string bus2;
  std::uint8_t terminals = 0;  // conductor mask, rendered as .1.2.3
  double r1_ohm = 0.0;         // whole-line totals
  double x1_ohm = 0.0;
  double length_km = 0.0;
};

struct DssLoad {
  std::string id;
  std::string bus;
  int terminal = 1;  // 1 = A, 2 = B, 3 = C
  double kv = 0.0;   // phase to ground
  double kw = 0.0;
  double kvar = 0.0;
};

/// Supported statement subset, in file order within each element class.
struct DssCircuit {
  std::string name;
  double basekv = 0.0;
  std::vector<DssTransformer> transformers;
  std::vector<DssLine> lines;
  std::vector<DssLoad> loads;

  /// Every bus named by a statement, in order of first appearance.
  std::vector<std::string> buses() const;
  /// Grid (hv/mv) transformers carry ids starting with "gt", hv lines "hl".
  static bool is_grid_transformer(const DssTransformer& t) { return t.id.rfind("gt", 0) == 0; }
  static bool is_hv_line(const DssLine& l) { return l.id.rfind("hl", 0) == 0; }
};

DssCircuit build_dss_circuit(const GridSample& sample, const GridTopology& topo);
std::string render_dss(const DssCircuit& circuit);
/// Throws UnsupportedStatement and MalformedStatement (message carries the line number).
DssCircuit parse_dss(std::string_view text);

/// Writes `<out_dir>/master.dss`; returns the path. Throws IoError.
std::string write_opendss(const GridSample& sample, const GridTopology& topo, const std::string& out_dir);
DssCircuit parse_opendss(const std::string& dir);

// --- grid tables ------------------------------------------------------------

std::string render_grid_tables(const GridSample& sample, const GridTopology& topo);
void write_grid_tables(const GridSample& sample, const GridTopology& topo, const std::string& path);

// --- GeoJSON ----------------------------------------------------------------

std::string render_geojson(const GridTopology& topo, const GridSample* sample = nullptr);
void write_geojson(const GridTopology& topo, const GridSample* sample, const std::string& path);

// --- ensemble statistics ----------------------------------------------------

struct StatRow {
  std::string metric;
  double mean = 0.0;
  double hdi_lo = 0.0;
  double hdi_hi = 0.0;
};

/// Seven phase rows (percent of non-substation buses per sample), then total
/// demand, mean r1, mean x1, mean r1/x1, CAIFI and CAIDI. Throws EmptyEnsemble.
std::vector<StatRow> ensemble_stats(const Ensemble& ensemble, const GridTopology& topo, double hdi_mass = 0.94);
std::string render_stats_csv(std::span<const StatRow> rows);
void write_ensemble_stats(const Ensemble& ensemble, const GridTopology& topo, double hdi_mass, const std::string& path);

}  // namespace gridsynth
