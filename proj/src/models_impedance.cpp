#include <cmath>
#include <iostream>

#include "gridsynth/error.hpp"
#include "models_internal.hpp"

namespace gridsynth {

ImpedancePosterior learn_impedance(std::span<const LineRecord> records, int zones, const Priors& priors,
                                   const McmcConfig& cfg, LearnReport* report) {
  detail::check_zone_count(zones);
  if (records.empty()) fail(Errc::EmptyDataset, "no line records");
  const auto all_zones = training_zones(records, zones);

  std::vector<double> r;
  std::vector<double> rho;
  std::vector<int> zone;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    // X/R is undefined without resistance and degenerate without reactance.
    if (!(rec.r1_ohm > 0) || !(rec.x1_ohm > 0)) {
      ++skipped;
      continue;
    }
    r.push_back(rec.r1_ohm / rec.length_km);
    rho.push_back(rec.x1_ohm / rec.r1_ohm);
    zone.push_back(all_zones[i]);
  }
  if (skipped > 0) {
    std::cerr << "warning: skipped " << skipped << " line record(s) with zero resistance or reactance\n";
  }
  if (r.empty()) fail(Errc::EmptyDataset, "no line record has positive resistance and reactance");

  auto rng = make_stream(cfg.seed, 0, detail::kSaltImpedance);
  const auto fit_r = fit_gamma_mixture(r, priors, rng);
  const auto fit_rho = fit_gamma_mixture(rho, priors, rng);

  const auto Z = static_cast<std::size_t>(zones);
  ImpedancePosterior post;
  post.zones = zones;
  post.gamma_r = fit_r.components;
  post.gamma_rho = fit_rho.components;
  MixWeights prior{};
  prior.fill(priors.mixture_concentration);
  post.concentration_r.assign(Z, prior);
  post.concentration_rho.assign(Z, prior);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto z = static_cast<std::size_t>(zone[i] - 1);
    for (std::size_t k = 0; k < kMixtureComponents; ++k) {
      post.concentration_r[z][k] += fit_r.responsibilities[i][k];
      post.concentration_rho[z][k] += fit_rho.responsibilities[i][k];
    }
  }

  const std::size_t n_draws = cfg.n_draws_kept > 0 ? cfg.n_draws_kept : kDefaultDraws;
  post.draws.reserve(n_draws);
  for (std::size_t d = 0; d < n_draws; ++d) {
    ImpedanceDraw draw;
    draw.w_r.resize(Z);
    draw.w_rho.resize(Z);
    for (std::size_t z = 0; z < Z; ++z) {
      const auto a = dirichlet(rng, post.concentration_r[z]);
      const auto b = dirichlet(rng, post.concentration_rho[z]);
      std::copy(a.begin(), a.end(), draw.w_r[z].begin());
      std::copy(b.begin(), b.end(), draw.w_rho[z].begin());
    }
    post.draws.push_back(std::move(draw));
  }
  if (report) {
    report->skipped_records = skipped;
    report->acceptance = 1.0;  // conjugate draws
  }
  return post;
}

LineAttributes sample_line_attributes(const ImpedancePosterior& post, int zone, double length_km, std::size_t draw,
                                      Rng& rng) {
  if (!(length_km > 0) || !std::isfinite(length_km)) fail(Errc::InvalidArgument, "line length must be positive");
  detail::check_zone(zone, post.zones);
  detail::check_draw(draw, post.draws.size());
  const auto z = static_cast<std::size_t>(zone - 1);
  const auto& d = post.draws[draw];
  const auto kr = categorical(rng, d.w_r[z]);
  const double r_per_km = gamma_shape_rate(rng, post.gamma_r[kr].shape, post.gamma_r[kr].rate);
  const auto kx = categorical(rng, d.w_rho[z]);
  const double rho = gamma_shape_rate(rng, post.gamma_rho[kx].shape, post.gamma_rho[kx].rate);
  LineAttributes a;
  a.r1_ohm = r_per_km * length_km;
  a.x1_ohm = a.r1_ohm * rho;
  return a;
}

void validate(const ImpedancePosterior& p) {
  if (p.zones < 1) fail(Errc::SchemaMismatch, "impedance posterior needs zones >= 1");
  const auto Z = static_cast<std::size_t>(p.zones);
  for (const auto* table : {&p.gamma_r, &p.gamma_rho}) {
    for (const auto& g : *table) {
      if (!(g.shape > 0) || !(g.rate > 0) || !std::isfinite(g.shape) || !std::isfinite(g.rate)) {
        fail(Errc::SchemaMismatch, "Gamma shapes and rates must be positive");
      }
    }
  }
  if (p.concentration_r.size() != Z || p.concentration_rho.size() != Z) {
    fail(Errc::SchemaMismatch, "mixture concentration must have one row per zone");
  }
  if (p.draws.empty()) fail(Errc::SchemaMismatch, "posterior has no draws");
  auto check_simplex = [](const MixWeights& w) {
    double s = 0.0;
    for (double v : w) {
      if (!(v >= 0)) fail(Errc::SchemaMismatch, "mixture weight must be non-negative");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) fail(Errc::SchemaMismatch, "mixture weights do not sum to 1");
  };
  for (const auto& d : p.draws) {
    if (d.w_r.size() != Z || d.w_rho.size() != Z) fail(Errc::SchemaMismatch, "draw does not cover every zone");
    for (const auto& w : d.w_r) check_simplex(w);
    for (const auto& w : d.w_rho) check_simplex(w);
  }
}

}  // namespace gridsynth
