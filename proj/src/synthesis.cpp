#include "gridsynth/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "gridsynth/error.hpp"

namespace gridsynth {

namespace {
constexpr std::uint64_t kSaltSynthesis = 0x53594e;
}

double GridSample::total_demand_kw() const {
  double t = 0.0;
  // Row-by-row accumulation so exported load tables sum to the same value.
  for (const auto& b : buses) {
    for (double p : b.p_kw) t += p;
  }
  return t;
}

ModelSet default_models(int zones, std::size_t draws) {
  return {default_power_posterior(zones, draws), default_impedance_posterior(zones, draws),
          default_frequency_posterior(zones, draws), default_duration_posterior(zones, draws)};
}

std::vector<Phase> phase_consistency_scan(const GridTopology& topo, const PhaseSampler& sampler) {
  return phase_consistency_scan(topo, index_tree(topo), sampler);
}

std::vector<Phase> phase_consistency_scan(const GridTopology& topo, const TreeIndex& tree, const PhaseSampler& sampler) {
  if (tree.order.size() != topo.buses.size()) fail(Errc::NonRadialTopology, "tree index does not cover the topology");
  std::vector<Phase> phase(topo.buses.size(), Phase::ABC);
  for (auto b : tree.order) {
    if (tree.parent[b] < 0) {
      phase[b] = Phase::ABC;
      continue;
    }
    const auto allowed = PhaseSet::subsets_of(phase[static_cast<std::size_t>(tree.parent[b])]);
    const auto p = sampler(b, allowed);
    if (!allowed.contains(p)) fail(Errc::InvalidArgument, "phase sampler left the allowed set at " + topo.buses[b].id);
    phase[b] = p;
  }
  return phase;
}

std::size_t count_phase_violations(const GridTopology& topo, const TreeIndex& tree, std::span<const Phase> phases) {
  std::size_t bad = 0;
  for (std::size_t b = 0; b < topo.buses.size(); ++b) {
    if (tree.parent[b] < 0) {
      bad += phases[b] == Phase::ABC ? 0 : 1;
    } else {
      bad += is_subset(phases[b], phases[static_cast<std::size_t>(tree.parent[b])]) ? 0 : 1;
    }
  }
  return bad;
}

std::size_t count_phase_violations(const GridTopology& topo, const TreeIndex& tree, const GridSample& sample) {
  std::vector<Phase> phases;
  phases.reserve(sample.buses.size());
  for (const auto& b : sample.buses) phases.push_back(b.phase);
  return count_phase_violations(topo, tree, phases);
}

void assign_reactive_power(GridSample& sample, double power_factor) {
  if (!(power_factor > 0.0 && power_factor <= 1.0)) {
    fail(Errc::InvalidPowerFactor, "power factor must lie in (0, 1]");
  }
  const double ratio = power_factor == 1.0 ? 0.0 : std::tan(std::acos(power_factor));
  for (auto& b : sample.buses) {
    for (int c = 0; c < 3; ++c) b.q_kvar[c] = has_conductor(b.phase, c) ? b.p_kw[c] * ratio : 0.0;
  }
}

Synthesizer::Synthesizer(const GridTopology& topo, const ModelSet& models, SynthesisOptions options)
    : topo_(topo), models_(models), options_(std::move(options)) {
  const int Z = topo.zones.zones;
  for (int z : {models.power.zones, models.impedance.zones, models.frequency.zones, models.duration.zones}) {
    if (z != Z) {
      fail(Errc::ZoneCountMismatch,
           "posterior has " + std::to_string(z) + " zones, topology has " + std::to_string(Z));
    }
  }
  if (!(options_.power_factor > 0.0 && options_.power_factor <= 1.0)) {
    fail(Errc::InvalidPowerFactor, "power factor must lie in (0, 1]");
  }
  if (options_.building_scales && options_.building_scales->size() != topo.buses.size()) {
    fail(Errc::InvalidArgument, "building scale override needs one value per bus");
  }
  validate(models.power);
  validate(models.impedance);
  validate(models.frequency);
  validate(models.duration);
  tree_ = index_tree(topo);
  hash_ = gridsynth::topology_hash(topo);
  draw_span_ = std::max({models.power.draws.size(), models.impedance.draws.size(), models.frequency.draws.size(),
                         models.duration.draws.size()});
}

GridSample Synthesizer::sample(std::uint64_t seed, std::size_t sample_idx) const {
  auto rng = make_stream(seed, sample_idx, kSaltSynthesis);
  GridSample s;
  s.sample_idx = sample_idx;
  s.topology_hash = hash_;
  s.draw_idx = std::uniform_int_distribution<std::size_t>(0, draw_span_ - 1)(rng);
  const auto d_power = s.draw_idx % models_.power.draws.size();
  const auto d_imp = s.draw_idx % models_.impedance.draws.size();
  const auto d_freq = s.draw_idx % models_.frequency.draws.size();
  const auto d_dur = s.draw_idx % models_.duration.draws.size();

  s.buses.resize(topo_.buses.size());
  const auto& zone = topo_.zones.node_zone;
  // Phase and power in one breadth-first pass so each bus consumes its
  // random numbers in a fixed order.
  const auto phases = phase_consistency_scan(topo_, tree_, [&](std::size_t b, PhaseSet allowed) {
    const auto& bus = topo_.buses[b];
    if (!bus.load_point) return sample_phase(models_.power, zone[b], allowed, d_power, rng);
    const double scale = options_.building_scales ? (*options_.building_scales)[b] : bus.building_scale;
    const auto a = sample_node_attributes(models_.power, zone[b], allowed, d_power, rng, scale);
    s.buses[b].p_kw = a.p_kw;
    return a.phase;
  });
  for (std::size_t b = 0; b < phases.size(); ++b) s.buses[b].phase = phases[b];

  s.lines.resize(topo_.branches.size());
  for (std::size_t l = 0; l < topo_.branches.size(); ++l) {
    const auto a = sample_line_attributes(models_.impedance, topo_.zones.line_zone[l], topo_.branches[l].length_km,
                                          d_imp, rng);
    s.lines[l] = {a.r1_ohm, a.x1_ohm};
  }
  for (std::size_t b = 0; b < topo_.buses.size(); ++b) {
    // Same law as sample_reliability, but frequency and duration may hold
    // different draw counts.
    const auto z = static_cast<std::size_t>(zone[b] - 1);
    const auto& f = models_.frequency.draws[d_freq];
    const auto& d = models_.duration.draws[d_dur];
    s.buses[b].interruptions_per_year = negative_binomial(rng, f.mu[z], f.alpha);
    s.buses[b].duration_h = uniform01(rng) < d.p[z] ? weibull(rng, d.weibull[z].shape, d.weibull[z].scale) : 0.0;
  }
  assign_reactive_power(s, options_.power_factor);
  return s;
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1u, jobs);
  if (jobs == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex m;
  std::exception_ptr error;
  std::size_t error_idx = SIZE_MAX;
  auto worker = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (i < error_idx) {
          error_idx = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const auto count = std::min<std::size_t>(jobs, n);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Ensemble generate_ensemble(const GridTopology& topo, const ModelSet& models, std::size_t n, std::uint64_t seed,
                           const SynthesisOptions& options, unsigned jobs) {
  if (n < 1) fail(Errc::InvalidArgument, "ensemble size must be at least 1");
  const Synthesizer synth(topo, models, options);
  Ensemble e;
  e.topology_hash = synth.topology_hash();
  e.seed = seed;
  e.samples.resize(n);
  parallel_for(n, jobs, [&](std::size_t k) { e.samples[k] = synth.sample(seed, k); });
  return e;
}

}  // namespace gridsynth
