#include "gridsynth/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "gridsynth/error.hpp"

namespace gridsynth {

void McmcConfig::validate() const {
  if (!(steps > burn_in)) fail(Errc::InvalidArgument, "MCMC needs steps > burn_in");
  if (thin < 1) fail(Errc::InvalidArgument, "MCMC needs thin >= 1");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    fail(Errc::InvalidArgument, "target acceptance must lie in (0, 1)");
  }
  if (!(min_step > 0.0) || !(initial_step > 0.0)) fail(Errc::InvalidArgument, "step sizes must be positive");
}

McmcTrace adaptive_metropolis(const LogDensity& log_posterior, std::vector<double> x, const McmcConfig& cfg,
                              Rng& rng) {
  cfg.validate();
  if (x.empty()) fail(Errc::InvalidArgument, "MCMC needs at least one coordinate");
  double lp = log_posterior(x);
  if (!std::isfinite(lp)) fail(Errc::NonFiniteInit, "log posterior is not finite at the initial point");

  const std::size_t dim = x.size();
  const double log_min_step = std::log(cfg.min_step);
  std::vector<double> log_step(dim, std::log(std::max(cfg.initial_step, cfg.min_step)));
  std::vector<std::size_t> accepted(dim, 0);
  std::size_t proposals = 0;

  McmcTrace trace;
  trace.draws.reserve((cfg.steps - cfg.burn_in) / cfg.thin);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const bool adapting = t < cfg.burn_in;
    const double gain = std::pow(static_cast<double>(t) + 1.0, -0.6);
    for (std::size_t i = 0; i < dim; ++i) {
      const double old = x[i];
      x[i] = old + std::exp(log_step[i]) * gauss(rng);
      const double cand = log_posterior(x);
      double accept_prob = 0.0;
      if (std::isfinite(cand)) accept_prob = cand >= lp ? 1.0 : std::exp(cand - lp);
      const bool accept = unif(rng) < accept_prob;
      if (accept) {
        lp = cand;
      } else {
        x[i] = old;
      }
      if (adapting) {
        log_step[i] += gain * (accept_prob - cfg.target_acceptance);
        log_step[i] = std::max(log_step[i], log_min_step);
      } else {
        accepted[i] += accept ? 1 : 0;
      }
    }
    if (!adapting) {
      ++proposals;
      if ((t - cfg.burn_in + 1) % cfg.thin == 0) trace.draws.push_back(x);
    }
  }

  trace.step_size.resize(dim);
  trace.acceptance.resize(dim);
  double total = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    trace.step_size[i] = std::exp(log_step[i]);
    trace.acceptance[i] = static_cast<double>(accepted[i]) / static_cast<double>(proposals);
    total += trace.acceptance[i];
  }
  trace.overall_acceptance = total / static_cast<double>(dim);
  const auto worst = std::min_element(trace.acceptance.begin(), trace.acceptance.end());
  if (*worst < 0.01) {
    fail(Errc::DegenerateTarget, "acceptance " + std::to_string(*worst) + " on coordinate " +
                                     std::to_string(worst - trace.acceptance.begin()) + " after adaptation");
  }
  return trace;
}

std::pair<double, double> compute_hdi(std::span<const double> samples, double mass) {
  if (samples.size() < 2) fail(Errc::TooFewSamples, "HDI needs at least two samples");
  if (!(mass > 0.0 && mass < 1.0)) fail(Errc::InvalidArgument, "HDI mass must lie in (0, 1)");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const auto n = s.size();
  auto m = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9));
  m = std::clamp<std::size_t>(m, 1, n);
  std::size_t best = 0;
  double width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + m <= n; ++i) {
    const double w = s[i + m - 1] - s[i];
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return {s[best], s[best + m - 1]};
}

double log_normal_cdf(double t) noexcept {
  if (t > -20.0) return std::log(0.5 * std::erfc(-t / std::numbers::sqrt2));
  // Mills-ratio asymptote.
  const double t2 = t * t;
  return -0.5 * t2 - std::log(-t) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log1p(-1.0 / t2 + 3.0 / (t2 * t2));
}

}  // namespace gridsynth
