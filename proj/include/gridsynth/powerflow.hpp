#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridsynth/synthesis.hpp"
#include "gridsynth/topology.hpp"

namespace gridsynth {

using cplx = std::complex<double>;
using Phasor3 = std::array<cplx, 3>;

struct PfBranch {
  std::size_t from = 0;
  std::size_t to = 0;
  Phasor3 z{};                 // per-phase series impedance, p.u.
  std::uint8_t mask = 0;       // conductors present (bit 0 = A)
};

/// Decoupled per-phase radial network in per-unit. Injections are positive
/// for generation and negative for load.
struct ThreePhaseNetwork {
  std::vector<double> base_kv;
  std::vector<std::uint8_t> mask;   // conductors energized at each bus
  std::vector<Phasor3> injection;   // complex power, p.u. per phase
  std::vector<PfBranch> branches;
  std::vector<std::size_t> sources; // slack buses at 1.0 / -120 / +120 degrees
  double s_base_mva = 1.0;

  std::size_t size() const { return mask.size(); }
  /// Appends a bus; returns its index.
  std::size_t add_bus(double kv, std::uint8_t conductors);
};

/// Sample + topology to the per-unit network (bus indices match the topology).
/// Lines use r1 + j x1 on each active phase over the bus kV base;
/// transformers use vk/vkr on their rating rebased to s_base. Throws
/// HashMismatch. `known_hash` skips re-hashing the topology when given.
ThreePhaseNetwork build_pf_network(const GridSample& sample, const GridTopology& topo, double s_base_mva = 1.0,
                                   std::string_view known_hash = {});

struct PfOptions {
  double tol = 1e-6;
  int max_iter = 100;
};

struct PFResult {
  bool converged = false;
  int iterations = 0;
  double max_mismatch = 0.0;           // largest |dV| of the final sweep
  std::vector<Phasor3> voltage;        // p.u.; inactive phases are 0
  std::vector<std::uint8_t> mask;
};

/// Forward/backward sweep with constant-power loads; non-convergence is a
/// result state. Throws NonRadialTopology when the branch set is not a forest
/// rooted at the sources.
PFResult solve_fbs(const ThreePhaseNetwork& net, const PfOptions& options = {});

/// Slack phasor for conductor c.
cplx source_voltage(int conductor);

struct PhaseExtrema {
  std::array<double, 3> min{};  // NaN when no bus has that phase
  std::array<double, 3> max{};
};
PhaseExtrema phase_extrema(const PFResult& r);

struct VoltageBand {
  double lo = 0.9;
  double hi = 1.1;
};

/// Every active voltage magnitude inside the band, on a converged result.
bool in_band(const PFResult& r, VoltageBand band);

struct HistogramSpec {
  double lo = 0.85;
  double hi = 1.15;
  std::size_t bins = 60;
};

struct VoltageStats {
  std::size_t samples = 0;
  double convergence_rate = 0.0;
  double in_band_fraction = 0.0;
  std::array<double, 3> min{};
  std::array<double, 3> max{};
  HistogramSpec spec;
  std::array<std::vector<std::size_t>, 3> histogram;  // per phase; values outside fall into the edge bins
};

/// Throws EmptyInput.
VoltageStats summarize_voltages(std::span<const PFResult> results, VoltageBand band = {}, HistogramSpec spec = {});

/// sample_idx, converged, iterations, min/max per phase, in_band.
std::string render_validation_csv(std::span<const PFResult> results, VoltageBand band);
/// bin_lo, bin_hi, count_a, count_b, count_c.
std::string render_histogram_csv(const VoltageStats& stats);
/// Three stacked per-phase histograms.
std::string render_histogram_svg(const VoltageStats& stats);

}  // namespace gridsynth
