#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "gridsynth/random.hpp"

namespace gridsynth {

struct McmcConfig {
  std::size_t steps = 20000;
  std::size_t burn_in = 10000;
  std::size_t thin = 20;
  double target_acceptance = 0.30;
  std::uint64_t seed = 1;
  std::size_t n_draws_kept = 500;
  // Lower bound on adapted step sizes; a coordinate whose posterior is far
  // narrower than this is reported as degenerate rather than chased to zero.
  double min_step = 1e-3;
  double initial_step = 0.5;

  void validate() const;
};

struct McmcTrace {
  std::vector<std::vector<double>> draws;
  std::vector<double> step_size;
  std::vector<double> acceptance;  // post burn-in, per coordinate
  double overall_acceptance = 0.0;
};

using LogDensity = std::function<double(std::span<const double>)>;

/// Metropolis-within-Gibbs random walk. Each step proposes every coordinate in
/// turn; during burn-in the log step size of each coordinate follows a
/// Robbins-Monro recursion toward the target acceptance rate.
/// Throws NonFiniteInit and DegenerateTarget.
McmcTrace adaptive_metropolis(const LogDensity& log_posterior, std::vector<double> init, const McmcConfig& cfg,
                              Rng& rng);

/// Shortest interval covering ceil(mass * n) of the sorted samples.
std::pair<double, double> compute_hdi(std::span<const double> samples, double mass);

/// log Phi(t) for the standard normal CDF, stable in the lower tail.
double log_normal_cdf(double t) noexcept;

}  // namespace gridsynth
