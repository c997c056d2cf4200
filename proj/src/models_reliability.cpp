#include <algorithm>
#include <cmath>
#include <map>

#include "gridsynth/error.hpp"
#include "models_internal.hpp"

namespace gridsynth {

namespace {

double beta_draw(Rng& rng, double a, double b) {
  const double x = gamma_shape_rate(rng, a, 1.0);
  const double y = gamma_shape_rate(rng, b, 1.0);
  return x + y > 0 ? x / (x + y) : a / (a + b);
}

/// Posterior over (log shape, log scale) of a Weibull given positive durations.
std::vector<std::vector<double>> weibull_trace(std::span<const double> durations, const Priors& priors,
                                               const McmcConfig& cfg, Rng& rng, double* acceptance) {
  double sum_log = 0.0;
  for (double x : durations) sum_log += std::log(x);
  const double n = static_cast<double>(durations.size());
  auto log_post = [&](std::span<const double> th) {
    const double k = std::exp(th[0]);
    const double lam = std::exp(th[1]);
    double s = 0.0;
    for (double x : durations) s += std::pow(x / lam, k);
    return n * (th[0] - k * th[1]) + (k - 1.0) * sum_log - s +
           detail::normal_log_pdf(th[0], priors.weibull_log_shape_mean, priors.weibull_log_shape_sd) +
           detail::normal_log_pdf(th[1], priors.weibull_log_scale_mean, priors.weibull_log_scale_sd);
  };
  // Start at the exponential fit: shape 1, scale = sample mean.
  double mean = 0.0;
  for (double x : durations) mean += x;
  mean /= n;
  const auto trace = adaptive_metropolis(log_post, {0.0, std::log(mean)}, cfg, rng);
  if (acceptance) *acceptance = trace.overall_acceptance;
  return detail::thin_to(trace.draws, cfg.n_draws_kept);
}

}  // namespace

FrequencyPosterior learn_frequency(std::span<const BusRecord> records, int zones, const Priors& priors,
                                   const McmcConfig& cfg, LearnReport* report) {
  detail::check_zone_count(zones);
  if (records.empty()) fail(Errc::EmptyDataset, "no bus records");
  cfg.validate();
  const auto zone = training_zones(records, zones);
  const auto Z = static_cast<std::size_t>(zones);

  // Count histograms: the likelihood only depends on (count, multiplicity).
  std::vector<std::map<long, double>> hist(Z);
  std::vector<double> n(Z, 0.0);
  std::vector<double> total(Z, 0.0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto z = static_cast<std::size_t>(zone[i] - 1);
    hist[z][records[i].interruptions_per_year] += 1.0;
    n[z] += 1.0;
    total[z] += static_cast<double>(records[i].interruptions_per_year);
  }
  std::vector<std::vector<std::pair<double, double>>> flat(Z);
  for (std::size_t z = 0; z < Z; ++z) {
    for (const auto& [c, m] : hist[z]) flat[z].emplace_back(static_cast<double>(c), m);
  }

  const std::size_t dim = Z + 1;
  auto log_post = [&](std::span<const double> th) {
    const double alpha = std::exp(th[Z]);
    const double lg_alpha = std::lgamma(alpha);
    double lp = detail::normal_log_pdf(th[Z], priors.freq_log_alpha_mean, priors.freq_log_alpha_sd);
    for (std::size_t z = 0; z < Z; ++z) {
      lp += detail::normal_log_pdf(th[z], priors.freq_log_mu_mean, priors.freq_log_mu_sd);
      if (n[z] == 0) continue;
      const double mu = std::exp(th[z]);
      const double la = std::log(alpha / (alpha + mu));
      const double lm = std::log(mu / (alpha + mu));
      for (const auto& [c, m] : flat[z]) {
        lp += m * (std::lgamma(c + alpha) - lg_alpha - std::lgamma(c + 1.0) + alpha * la + c * lm);
      }
    }
    return lp;
  };

  std::vector<double> init(dim, 0.0);
  for (std::size_t z = 0; z < Z; ++z) {
    init[z] = n[z] > 0 ? std::log(std::max(total[z] / n[z], 0.05)) : priors.freq_log_mu_mean;
  }
  init[Z] = priors.freq_log_alpha_mean;

  auto rng = make_stream(cfg.seed, 0, detail::kSaltFrequency);
  const auto trace = adaptive_metropolis(log_post, init, cfg, rng);
  FrequencyPosterior post;
  post.zones = zones;
  for (const auto& th : detail::thin_to(trace.draws, cfg.n_draws_kept)) {
    FrequencyDraw d;
    d.mu.resize(Z);
    for (std::size_t z = 0; z < Z; ++z) d.mu[z] = std::exp(th[z]);
    d.alpha = std::exp(th[Z]);
    post.draws.push_back(std::move(d));
  }
  if (report) report->acceptance = trace.overall_acceptance;
  return post;
}

DurationPosterior learn_duration(std::span<const BusRecord> records, int zones, const Priors& priors,
                                 const McmcConfig& cfg, LearnReport* report) {
  detail::check_zone_count(zones);
  if (records.empty()) fail(Errc::EmptyDataset, "no bus records");
  cfg.validate();
  const auto zone = training_zones(records, zones);
  const auto Z = static_cast<std::size_t>(zones);

  DurationPosterior post;
  post.zones = zones;
  post.beta.assign(Z, {priors.beta_a, priors.beta_b});
  std::vector<std::vector<double>> durations(Z);
  std::vector<double> pooled;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto z = static_cast<std::size_t>(zone[i] - 1);
    const auto& d = records[i].interruption_durations_h;
    post.beta[z][d.empty() ? 1 : 0] += 1.0;
    durations[z].insert(durations[z].end(), d.begin(), d.end());
    pooled.insert(pooled.end(), d.begin(), d.end());
  }

  auto rng = make_stream(cfg.seed, 0, detail::kSaltDuration);
  const std::size_t expected = std::min((cfg.steps - cfg.burn_in) / cfg.thin,
                                        cfg.n_draws_kept > 0 ? cfg.n_draws_kept : SIZE_MAX);
  std::vector<std::vector<std::vector<double>>> traces(Z);
  std::vector<std::vector<double>> pooled_trace;
  double acc_sum = 0.0;
  int acc_n = 0;
  if (!pooled.empty()) {
    double acc = 0.0;
    pooled_trace = weibull_trace(pooled, priors, cfg, rng, &acc);
    acc_sum += acc;
    ++acc_n;
  }
  for (std::size_t z = 0; z < Z; ++z) {
    if (durations[z].empty()) continue;
    double acc = 0.0;
    traces[z] = weibull_trace(durations[z], priors, cfg, rng, &acc);
    acc_sum += acc;
    ++acc_n;
  }

  const std::size_t n_draws = pooled.empty() ? expected : pooled_trace.size();
  post.draws.reserve(n_draws);
  for (std::size_t i = 0; i < n_draws; ++i) {
    DurationDraw d;
    d.p.resize(Z);
    d.weibull.resize(Z);
    for (std::size_t z = 0; z < Z; ++z) {
      d.p[z] = beta_draw(rng, post.beta[z][0], post.beta[z][1]);
      const auto* src = !traces[z].empty() ? &traces[z] : (!pooled_trace.empty() ? &pooled_trace : nullptr);
      if (src) {
        d.weibull[z] = {std::exp((*src)[i][0]), std::exp((*src)[i][1])};
      } else {
        d.weibull[z] = priors.default_weibull;
      }
    }
    post.draws.push_back(std::move(d));
  }
  if (report) report->acceptance = acc_n > 0 ? acc_sum / acc_n : 1.0;
  return post;
}

ReliabilityAttributes sample_reliability(const FrequencyPosterior& freq, const DurationPosterior& dur, int zone,
                                         std::size_t draw, Rng& rng) {
  detail::check_zone(zone, freq.zones);
  detail::check_zone(zone, dur.zones);
  detail::check_draw(draw, freq.draws.size());
  detail::check_draw(draw, dur.draws.size());
  const auto z = static_cast<std::size_t>(zone - 1);
  const auto& f = freq.draws[draw];
  const auto& d = dur.draws[draw];
  ReliabilityAttributes out;
  out.interruptions_per_year = negative_binomial(rng, f.mu[z], f.alpha);
  if (uniform01(rng) < d.p[z]) out.duration_h = weibull(rng, d.weibull[z].shape, d.weibull[z].scale);
  return out;
}

void validate(const FrequencyPosterior& p) {
  if (p.zones < 1) fail(Errc::SchemaMismatch, "frequency posterior needs zones >= 1");
  if (p.draws.empty()) fail(Errc::SchemaMismatch, "posterior has no draws");
  for (const auto& d : p.draws) {
    if (d.mu.size() != static_cast<std::size_t>(p.zones)) fail(Errc::SchemaMismatch, "draw does not cover every zone");
    for (double m : d.mu) {
      if (!(m > 0) || !std::isfinite(m)) fail(Errc::SchemaMismatch, "mu must be positive");
    }
    if (!(d.alpha > 0) || !std::isfinite(d.alpha)) fail(Errc::SchemaMismatch, "dispersion must be positive");
  }
}

void validate(const DurationPosterior& p) {
  if (p.zones < 1) fail(Errc::SchemaMismatch, "duration posterior needs zones >= 1");
  const auto Z = static_cast<std::size_t>(p.zones);
  if (p.beta.size() != Z) fail(Errc::SchemaMismatch, "Beta parameters must have one row per zone");
  for (const auto& b : p.beta) {
    if (!(b[0] > 0) || !(b[1] > 0)) fail(Errc::SchemaMismatch, "Beta parameters must be positive");
  }
  if (p.draws.empty()) fail(Errc::SchemaMismatch, "posterior has no draws");
  for (const auto& d : p.draws) {
    if (d.p.size() != Z || d.weibull.size() != Z) fail(Errc::SchemaMismatch, "draw does not cover every zone");
    for (double v : d.p) {
      if (!(v >= 0 && v <= 1)) fail(Errc::SchemaMismatch, "interruption probability outside [0, 1]");
    }
    for (const auto& w : d.weibull) {
      if (!(w.shape > 0) || !(w.scale > 0) || !std::isfinite(w.shape) || !std::isfinite(w.scale)) {
        fail(Errc::SchemaMismatch, "Weibull parameters must be positive");
      }
    }
  }
}

}  // namespace gridsynth
