#pragma once

#include <cmath>
#include <numbers>

namespace gridsynth {

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

inline constexpr double kEarthRadiusKm = 6371.0088;

/// Great-circle distance in km on the mean-radius sphere.
inline double haversine_km(const LatLon& a, const LatLon& b) noexcept {
  constexpr double deg = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * deg;
  const double dlon = (b.lon - a.lon) * deg;
  const double s = std::sin(dlat / 2.0);
  const double t = std::sin(dlon / 2.0);
  const double h = s * s + std::cos(a.lat * deg) * std::cos(b.lat * deg) * t * t;
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::fmin(1.0, h)));
}

}  // namespace gridsynth
