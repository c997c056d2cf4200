// Shipped parameter set used when no training data is available. Every value
// and its rationale is listed in docs/default_parameters.md.

#include <cmath>

#include "models_internal.hpp"

namespace gridsynth {

namespace {

// Phase shares (percent) observed on the reference network, category order.
constexpr Simplex7 kPhaseSharePercent = {39.93, 29.64, 26.46, 0.82, 2.37, 0.65, 0.12};
constexpr double kPhaseConcentration = 500.0;

// Potential power per configuration k = 1, 2, 3 conductors, kW, nearest zone.
constexpr std::array<double, 3> kPotentialKw = {1.8, 3.6, 7.5};
constexpr double kPotentialTrend = 0.10;  // relative growth towards the last zone
constexpr double kSigmaKw = 0.6;
constexpr double kJitter = 0.05;

// Resistance per km: (shape, mean ohm/km) per component.
constexpr std::array<std::array<double, 2>, 3> kResistance = {{{20.0, 0.2}, {15.0, 0.45}, {10.0, 0.9}}};
constexpr MixWeights kResistanceNear = {0.55, 0.35, 0.10};
constexpr MixWeights kResistanceFar = {0.15, 0.45, 0.40};

// X/R ratio: shape 30 and rate 29 t make E[R/X] = t for each component, so the
// weighted mean R/X is 0.25 * 1.8 + 0.5 * 1.5 + 0.25 * 1.2 = 1.5.
constexpr double kRatioShape = 30.0;
constexpr std::array<double, 3> kRatioTarget = {1.8, 1.5, 1.2};
constexpr MixWeights kRatioWeights = {0.25, 0.5, 0.25};
constexpr double kMixtureConcentration = 400.0;

constexpr double kFreqNear = 2.5;
constexpr double kFreqFar = 5.0;
constexpr double kFreqAlpha = 1.5;

constexpr double kHurdleNear = 0.55;
constexpr double kHurdleFar = 0.85;
constexpr double kHurdleConcentration = 200.0;
constexpr double kWeibullShape = 0.9;
constexpr double kWeibullScaleNear = 2.5;
constexpr double kWeibullScaleFar = 5.0;

constexpr std::uint64_t kDefaultSeed = 0x67726964;

double position(std::size_t z, int zones) {
  return zones > 1 ? static_cast<double>(z) / static_cast<double>(zones - 1) : 0.0;
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

double jitter(Rng& rng) { return std::exp(kJitter * standard_normal(rng)); }

}  // namespace

Simplex7 default_phase_shares() {
  Simplex7 s = kPhaseSharePercent;
  double total = 0.0;
  for (double v : s) total += v;
  for (double& v : s) v /= total;
  return s;
}

PowerPosterior default_power_posterior(int zones, std::size_t draws) {
  detail::check_zone_count(zones);
  const auto Z = static_cast<std::size_t>(zones);
  PowerPosterior post;
  post.zones = zones;
  const auto shares = default_phase_shares();
  Simplex7 conc{};
  for (std::size_t i = 0; i < kPhaseCategories; ++i) conc[i] = kPhaseConcentration * shares[i];
  post.concentration.assign(Z, conc);

  auto rng = make_stream(kDefaultSeed, static_cast<std::uint64_t>(zones), detail::kSaltPower);
  post.draws.reserve(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    PowerDraw draw;
    draw.c.resize(Z);
    draw.p_pot.resize(Z);
    for (std::size_t z = 0; z < Z; ++z) {
      const auto c = dirichlet(rng, conc);
      std::copy(c.begin(), c.end(), draw.c[z].begin());
      const double trend = 1.0 + kPotentialTrend * position(z, zones);
      for (std::size_t k = 0; k < 3; ++k) draw.p_pot[z][k] = kPotentialKw[k] * trend * jitter(rng);
    }
    draw.sigma_p = kSigmaKw * jitter(rng);
    post.draws.push_back(std::move(draw));
  }
  return post;
}

ImpedancePosterior default_impedance_posterior(int zones, std::size_t draws) {
  detail::check_zone_count(zones);
  const auto Z = static_cast<std::size_t>(zones);
  ImpedancePosterior post;
  post.zones = zones;
  for (std::size_t k = 0; k < kMixtureComponents; ++k) {
    post.gamma_r[k] = {kResistance[k][0], kResistance[k][0] / kResistance[k][1]};
    post.gamma_rho[k] = {kRatioShape, (kRatioShape - 1.0) * kRatioTarget[k]};
  }
  for (std::size_t z = 0; z < Z; ++z) {
    MixWeights wr{};
    MixWeights wx{};
    for (std::size_t k = 0; k < kMixtureComponents; ++k) {
      wr[k] = kMixtureConcentration * lerp(kResistanceNear[k], kResistanceFar[k], position(z, zones));
      wx[k] = kMixtureConcentration * kRatioWeights[k];
    }
    post.concentration_r.push_back(wr);
    post.concentration_rho.push_back(wx);
  }
  auto rng = make_stream(kDefaultSeed, static_cast<std::uint64_t>(zones), detail::kSaltImpedance);
  post.draws.reserve(draws);
  for (std::size_t d = 0; d < draws; ++d) {
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
  return post;
}

FrequencyPosterior default_frequency_posterior(int zones, std::size_t draws) {
  detail::check_zone_count(zones);
  const auto Z = static_cast<std::size_t>(zones);
  FrequencyPosterior post;
  post.zones = zones;
  auto rng = make_stream(kDefaultSeed, static_cast<std::uint64_t>(zones), detail::kSaltFrequency);
  post.draws.reserve(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    FrequencyDraw draw;
    draw.mu.resize(Z);
    for (std::size_t z = 0; z < Z; ++z) draw.mu[z] = lerp(kFreqNear, kFreqFar, position(z, zones)) * jitter(rng);
    draw.alpha = kFreqAlpha * jitter(rng);
    post.draws.push_back(std::move(draw));
  }
  return post;
}

DurationPosterior default_duration_posterior(int zones, std::size_t draws) {
  detail::check_zone_count(zones);
  const auto Z = static_cast<std::size_t>(zones);
  DurationPosterior post;
  post.zones = zones;
  for (std::size_t z = 0; z < Z; ++z) {
    const double p = lerp(kHurdleNear, kHurdleFar, position(z, zones));
    post.beta.push_back({kHurdleConcentration * p, kHurdleConcentration * (1.0 - p)});
  }
  auto rng = make_stream(kDefaultSeed, static_cast<std::uint64_t>(zones), detail::kSaltDuration);
  post.draws.reserve(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    DurationDraw draw;
    draw.p.resize(Z);
    draw.weibull.resize(Z);
    for (std::size_t z = 0; z < Z; ++z) {
      const double a = gamma_shape_rate(rng, post.beta[z][0], 1.0);
      const double b = gamma_shape_rate(rng, post.beta[z][1], 1.0);
      draw.p[z] = a / (a + b);
      draw.weibull[z] = {kWeibullShape * jitter(rng),
                         lerp(kWeibullScaleNear, kWeibullScaleFar, position(z, zones)) * jitter(rng)};
    }
    post.draws.push_back(std::move(draw));
  }
  return post;
}

}  // namespace gridsynth
