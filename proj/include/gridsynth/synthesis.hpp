#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridsynth/models.hpp"
#include "gridsynth/phase.hpp"
#include "gridsynth/topology.hpp"

namespace gridsynth {

struct BusState {
  Phase phase = Phase::ABC;
  std::array<double, 3> p_kw{};
  std::array<double, 3> q_kvar{};
  long interruptions_per_year = 0;
  double duration_h = 0.0;

  friend bool operator==(const BusState&, const BusState&) = default;
};

struct LineState {
  double r1_ohm = 0.0;
  double x1_ohm = 0.0;

  friend bool operator==(const LineState&, const LineState&) = default;
};

/// One parameterized realization; `buses` and `lines` are parallel to the
/// topology's bus and branch arrays.
struct GridSample {
  std::size_t sample_idx = 0;
  std::size_t draw_idx = 0;
  std::string topology_hash;
  std::vector<BusState> buses;
  std::vector<LineState> lines;

  double total_demand_kw() const;

  friend bool operator==(const GridSample&, const GridSample&) = default;
};

struct Ensemble {
  std::string topology_hash;
  std::uint64_t seed = 0;
  std::vector<GridSample> samples;
};

struct ModelSet {
  PowerPosterior power;
  ImpedancePosterior impedance;
  FrequencyPosterior frequency;
  DurationPosterior duration;
};

/// All four shipped default posteriors at `zones`.
ModelSet default_models(int zones, std::size_t draws = kDefaultDraws);

struct SynthesisOptions {
  double power_factor = 0.95;
  /// Per-bus override of the topology's building scales.
  std::optional<std::vector<double>> building_scales;
};

using PhaseSampler = std::function<Phase(std::size_t bus, PhaseSet allowed)>;

/// Breadth-first from each substation (forced to ABC); every other bus may
/// only take a conductor subset of its parent. Throws NonRadialTopology, and
/// InvalidArgument when the callback leaves the allowed set.
std::vector<Phase> phase_consistency_scan(const GridTopology& topo, const PhaseSampler& sampler);
std::vector<Phase> phase_consistency_scan(const GridTopology& topo, const TreeIndex& tree, const PhaseSampler& sampler);

/// Buses whose phase is not a subset of their parent's, plus substations not at ABC.
std::size_t count_phase_violations(const GridTopology& topo, const TreeIndex& tree, std::span<const Phase> phases);
std::size_t count_phase_violations(const GridTopology& topo, const TreeIndex& tree, const GridSample& sample);

/// q = p tan(acos(pf)) on active phases. Throws InvalidPowerFactor.
void assign_reactive_power(GridSample& sample, double power_factor);

/// Reusable sampler bound to one topology and model set.
class Synthesizer {
 public:
  /// Throws ZoneCountMismatch, NonRadialTopology, InvalidPowerFactor.
  Synthesizer(const GridTopology& topo, const ModelSet& models, SynthesisOptions options = {});

  /// Sample `sample_idx` of the ensemble seeded by `seed`; independent of any
  /// other sample.
  GridSample sample(std::uint64_t seed, std::size_t sample_idx) const;

  const TreeIndex& tree() const { return tree_; }
  const std::string& topology_hash() const { return hash_; }

 private:
  const GridTopology& topo_;
  const ModelSet& models_;
  SynthesisOptions options_;
  TreeIndex tree_;
  std::string hash_;
  std::size_t draw_span_ = 0;
};

Ensemble generate_ensemble(const GridTopology& topo, const ModelSet& models, std::size_t n, std::uint64_t seed,
                           const SynthesisOptions& options = {}, unsigned jobs = 1);

/// Runs `fn(i)` for i in [0, n) over `jobs` threads. Exceptions are rethrown
/// (the one from the lowest index wins) after all workers stop.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

// --- persistence ------------------------------------------------------------

std::string serialize_sample(const GridSample& sample, const GridTopology& topo);
GridSample parse_sample(std::string_view text, const GridTopology& topo);

struct EnsembleMeta {
  std::string topology_hash;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double power_factor = 0.95;
  std::map<std::string, std::string> posterior_hashes;
};

/// Layout: meta.json, topology.json, sample_<k>.json.
void write_ensemble(const std::string& dir, const Ensemble& ensemble, const GridTopology& topo,
                    const EnsembleMeta& meta, unsigned jobs = 1);

struct LoadedEnsemble {
  EnsembleMeta meta;
  GridTopology topology;
  Ensemble ensemble;
};

/// Throws MissingFile, SchemaMismatch, HashMismatch, EmptyEnsemble.
LoadedEnsemble read_ensemble(const std::string& dir, unsigned jobs = 1);

std::string sample_file_name(std::size_t k);

}  // namespace gridsynth
