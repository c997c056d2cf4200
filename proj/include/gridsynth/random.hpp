#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace gridsynth {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream, salt); used to give every sample
/// its own reproducible stream regardless of generation order.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t salt = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

/// Gamma with shape/rate parameterization (mean = shape / rate).
inline double gamma_shape_rate(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

/// Normal(mean, sd) truncated to [0, inf).
inline double truncated_normal_nonneg(Rng& rng, double mean, double sd) {
  const double a = -mean / sd;
  if (a <= 0.5) {
    for (;;) {
      const double z = standard_normal(rng);
      if (z >= a) return mean + sd * z;
    }
  }
  // Exponential proposal for the far tail.
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  std::exponential_distribution<double> expo(lambda);
  for (;;) {
    const double z = a + expo(rng);
    const double d = z - lambda;
    if (uniform01(rng) <= std::exp(-0.5 * d * d)) return std::fmax(0.0, mean + sd * z);
  }
}

/// Index drawn proportionally to non-negative weights (need not be normalized).
inline std::size_t categorical(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform01(rng) * total;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last = i;
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return last;
}

inline std::vector<double> dirichlet(Rng& rng, std::span<const double> concentration) {
  std::vector<double> out(concentration.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = gamma_shape_rate(rng, concentration[i], 1.0);
    total += out[i];
  }
  if (total <= 0.0) {
    // Underflow with tiny concentrations; fall back to the largest entry.
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.size(); ++i) {
      if (concentration[i] > concentration[best]) best = i;
    }
    std::fill(out.begin(), out.end(), 0.0);
    out[best] = 1.0;
    return out;
  }
  for (double& v : out) v /= total;
  return out;
}

/// NegativeBinomial(mean, alpha) with variance mean + mean^2 / alpha, via the
/// Gamma-Poisson mixture.
inline long negative_binomial(Rng& rng, double mean, double alpha) {
  const double lambda = gamma_shape_rate(rng, alpha, alpha / mean);
  if (lambda <= 0.0) return 0;
  return std::poisson_distribution<long>(lambda)(rng);
}

inline double weibull(Rng& rng, double shape, double scale) {
  return std::weibull_distribution<double>(shape, scale)(rng);
}

}  // namespace gridsynth
