#pragma once

// Helpers shared by the model sources; not part of the public interface.

#include <cmath>
#include <numbers>
#include <vector>

#include "gridsynth/error.hpp"
#include "gridsynth/mcmc.hpp"
#include "gridsynth/models.hpp"

namespace gridsynth::detail {

// Stream salts keep each model's randomness independent under one seed.
inline constexpr std::uint64_t kSaltPower = 0x5057;
inline constexpr std::uint64_t kSaltImpedance = 0x494d;
inline constexpr std::uint64_t kSaltFrequency = 0x4652;
inline constexpr std::uint64_t kSaltDuration = 0x4455;

/// Evenly spaced subset of at most `keep` trace rows.
inline std::vector<std::vector<double>> thin_to(const std::vector<std::vector<double>>& draws, std::size_t keep) {
  if (keep == 0 || draws.size() <= keep) return draws;
  std::vector<std::vector<double>> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(draws[i * draws.size() / keep]);
  return out;
}

inline double normal_log_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd);
}

inline void check_zone_count(int zones) {
  if (zones < 1) fail(Errc::InvalidArgument, "zone count must be at least 1");
}

inline void check_draw(std::size_t draw, std::size_t count) {
  if (draw >= count) {
    fail(Errc::InvalidArgument, "draw index " + std::to_string(draw) + " out of range (" + std::to_string(count) + ")");
  }
}

inline void check_zone(int zone, int zones) {
  if (zone < 1 || zone > zones) {
    fail(Errc::ZoneCountMismatch, "zone " + std::to_string(zone) + " outside 1.." + std::to_string(zones));
  }
}

/// Mean of Normal(mu, sd) truncated to [0, inf).
inline double truncated_normal_mean(double mu, double sd) {
  const double a = mu / sd;
  const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = std::exp(log_normal_cdf(a));
  if (cdf <= 0.0) return 0.0;
  return mu + sd * phi / cdf;
}

}  // namespace gridsynth::detail
