#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridsynth/error.hpp"
#include "models_internal.hpp"

namespace gridsynth {

namespace {

struct CellStats {
  double n = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

}  // namespace

PowerPosterior learn_power(std::span<const BusRecord> records, int zones, const Priors& priors, const McmcConfig& cfg,
                           LearnReport* report) {
  detail::check_zone_count(zones);
  if (records.empty()) fail(Errc::EmptyDataset, "no bus records");
  cfg.validate();
  const auto zone = training_zones(records, zones);
  const auto Z = static_cast<std::size_t>(zones);

  PowerPosterior post;
  post.zones = zones;
  post.concentration.assign(Z, Simplex7{});
  for (auto& c : post.concentration) c.fill(priors.dirichlet);

  // Per (zone, k) sufficient statistics of per-phase power / building_scale.
  std::vector<std::array<CellStats, 3>> cells(Z);
  std::array<CellStats, 3> pooled{};
  CellStats all;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto z = static_cast<std::size_t>(zone[i] - 1);
    post.concentration[z][index_of(r.phase)] += 1.0;
    const int k = conductor_count(r.phase);
    for (int c = 0; c < 3; ++c) {
      if (!has_conductor(r.phase, c)) continue;
      const double x = r.p_kw[c] / r.building_scale;
      for (CellStats* s : {&cells[z][k - 1], &pooled[k - 1], &all}) {
        s->n += 1.0;
        s->sum += x;
        s->sum_sq += x * x;
      }
    }
  }
  if (!(all.sum > 0.0)) fail(Errc::AllZeroPower, "every recorded power is zero; potential power is not identifiable");

  // Prior centers: pooled per-configuration totals, per-phase mean as fallback.
  const double per_phase_mean = all.sum / all.n;
  std::array<double, 3> center{};
  for (int k = 1; k <= 3; ++k) {
    const auto& s = pooled[k - 1];
    const double m = s.n > 0 && s.sum > 0 ? s.sum / s.n : per_phase_mean;
    center[k - 1] = std::log(m * k);
  }
  const double pooled_var = std::max(0.0, all.sum_sq / all.n - per_phase_mean * per_phase_mean);
  const double floor = priors.sigma_floor_kw;
  const double sigma_center = std::log(std::max(std::sqrt(pooled_var) - floor, std::max(floor, 1e-3)));

  const std::size_t dim = 3 * Z + 1;
  auto log_post = [&](std::span<const double> th) {
    const double sigma = floor + std::exp(th[dim - 1]);
    double lp = detail::normal_log_pdf(th[dim - 1], sigma_center, priors.sigma_log_sd);
    for (std::size_t z = 0; z < Z; ++z) {
      for (int k = 1; k <= 3; ++k) {
        const double t = th[3 * z + static_cast<std::size_t>(k - 1)];
        lp += detail::normal_log_pdf(t, center[k - 1], priors.power_log_sd);
        const auto& s = cells[z][k - 1];
        if (s.n == 0) continue;
        const double mu = std::exp(t) / k;
        const double ss = s.sum_sq - 2.0 * mu * s.sum + s.n * mu * mu;
        lp += -s.n * std::log(sigma) - ss / (2.0 * sigma * sigma) - s.n * log_normal_cdf(mu / sigma);
      }
    }
    return lp;
  };

  std::vector<double> init(dim);
  for (std::size_t z = 0; z < Z; ++z) {
    for (int k = 1; k <= 3; ++k) {
      const auto& s = cells[z][k - 1];
      init[3 * z + static_cast<std::size_t>(k - 1)] = s.n > 0 && s.sum > 0 ? std::log(s.sum / s.n * k) : center[k - 1];
    }
  }
  init[dim - 1] = sigma_center;

  auto rng = make_stream(cfg.seed, 0, detail::kSaltPower);
  const auto trace = adaptive_metropolis(log_post, init, cfg, rng);
  const auto kept = detail::thin_to(trace.draws, cfg.n_draws_kept);

  post.draws.reserve(kept.size());
  for (const auto& th : kept) {
    PowerDraw d;
    d.c.resize(Z);
    d.p_pot.resize(Z);
    for (std::size_t z = 0; z < Z; ++z) {
      const auto c = dirichlet(rng, post.concentration[z]);
      std::copy(c.begin(), c.end(), d.c[z].begin());
      for (int k = 0; k < 3; ++k) d.p_pot[z][k] = std::exp(th[3 * z + static_cast<std::size_t>(k)]);
    }
    d.sigma_p = floor + std::exp(th[dim - 1]);
    post.draws.push_back(std::move(d));
  }
  if (report) report->acceptance = trace.overall_acceptance;
  return post;
}

Phase sample_phase(const PowerPosterior& post, int zone, PhaseSet allowed, std::size_t draw, Rng& rng) {
  if (allowed.empty()) fail(Errc::EmptyAllowedSet, "no admissible phase configuration");
  detail::check_zone(zone, post.zones);
  detail::check_draw(draw, post.draws.size());
  const auto& c = post.draws[draw].c[static_cast<std::size_t>(zone - 1)];
  std::array<double, kPhaseCategories> w{};
  double total = 0.0;
  for (auto p : kAllPhases) {
    if (allowed.contains(p)) {
      w[index_of(p)] = c[index_of(p)];
      total += w[index_of(p)];
    }
  }
  if (!(total > 0.0)) {
    // Every admissible category has zero mass in this draw; fall back to uniform.
    for (auto p : kAllPhases) w[index_of(p)] = allowed.contains(p) ? 1.0 : 0.0;
  }
  return kAllPhases[categorical(rng, w)];
}

std::array<double, 3> sample_power(const PowerPosterior& post, int zone, Phase phase, double building_scale,
                                   std::size_t draw, Rng& rng) {
  detail::check_zone(zone, post.zones);
  detail::check_draw(draw, post.draws.size());
  const auto& d = post.draws[draw];
  const int k = conductor_count(phase);
  const double mean = d.p_pot[static_cast<std::size_t>(zone - 1)][static_cast<std::size_t>(k - 1)] / k * building_scale;
  std::array<double, 3> p{};
  for (int c = 0; c < 3; ++c) {
    if (has_conductor(phase, c)) p[c] = truncated_normal_nonneg(rng, mean, d.sigma_p);
  }
  return p;
}

NodeAttributes sample_node_attributes(const PowerPosterior& post, int zone, PhaseSet allowed, std::size_t draw,
                                      Rng& rng, double building_scale) {
  NodeAttributes a;
  a.phase = sample_phase(post, zone, allowed, draw, rng);
  a.p_kw = sample_power(post, zone, a.phase, building_scale, draw, rng);
  return a;
}

std::vector<double> expected_bus_demand_kw(const PowerPosterior& post) {
  std::vector<double> out(static_cast<std::size_t>(post.zones), 0.0);
  if (post.draws.empty()) return out;
  for (const auto& d : post.draws) {
    for (std::size_t z = 0; z < out.size(); ++z) {
      double e = 0.0;
      for (auto p : kAllPhases) {
        const int k = conductor_count(p);
        e += d.c[z][index_of(p)] * k * detail::truncated_normal_mean(d.p_pot[z][static_cast<std::size_t>(k - 1)] / k, d.sigma_p);
      }
      out[z] += e;
    }
  }
  for (auto& v : out) v /= static_cast<double>(post.draws.size());
  return out;
}

void validate(const PowerPosterior& p) {
  if (p.zones < 1) fail(Errc::SchemaMismatch, "power posterior needs zones >= 1");
  const auto Z = static_cast<std::size_t>(p.zones);
  if (p.concentration.size() != Z) fail(Errc::SchemaMismatch, "concentration must have one row per zone");
  for (const auto& row : p.concentration) {
    for (double a : row) {
      if (!(a > 0)) fail(Errc::SchemaMismatch, "Dirichlet concentration must be positive");
    }
  }
  if (p.draws.empty()) fail(Errc::SchemaMismatch, "posterior has no draws");
  for (const auto& d : p.draws) {
    if (d.c.size() != Z || d.p_pot.size() != Z) fail(Errc::SchemaMismatch, "draw does not cover every zone");
    for (const auto& c : d.c) {
      double s = 0.0;
      for (double v : c) {
        if (!(v >= 0)) fail(Errc::SchemaMismatch, "phase probability must be non-negative");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-9) fail(Errc::SchemaMismatch, "phase simplex does not sum to 1");
    }
    for (const auto& row : d.p_pot) {
      for (double v : row) {
        if (!(v > 0) || !std::isfinite(v)) fail(Errc::SchemaMismatch, "p_pot must be positive");
      }
    }
    if (!(d.sigma_p > 0) || !std::isfinite(d.sigma_p)) fail(Errc::SchemaMismatch, "sigma_p must be positive");
  }
}

}  // namespace gridsynth
