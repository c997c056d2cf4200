#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "gridsynth/error.hpp"
#include "gridsynth/models.hpp"

namespace gridsynth {

namespace {

constexpr double kShapeCap = 1e6;

double gamma_log_pdf(double x, double log_x, const GammaComponent& g) {
  return g.shape * std::log(g.rate) + (g.shape - 1.0) * log_x - g.rate * x - std::lgamma(g.shape);
}

/// Solves log(a) - digamma(a) = s for the Gamma shape (weighted MLE).
double solve_shape(double s) {
  if (!(s > 1e-12)) return kShapeCap;
  double a = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
  for (int it = 0; it < 50; ++it) {
    const double f = std::log(a) - boost::math::digamma(a) - s;
    const double df = 1.0 / a - boost::math::trigamma(a);
    double next = a - f / df;
    if (!(next > 0)) next = 0.5 * a;
    if (std::abs(next - a) < 1e-12 * a) {
      a = next;
      break;
    }
    a = next;
  }
  return std::min(a, kShapeCap);
}

/// Moment-matched component from a group of values; falls back to `fallback`
/// when the group is too small to have a variance.
GammaComponent moment_match(std::span<const double> group, const GammaComponent& fallback) {
  if (group.size() < 2) return fallback;
  double m = 0.0;
  for (double v : group) m += v;
  m /= static_cast<double>(group.size());
  double var = 0.0;
  for (double v : group) var += (v - m) * (v - m);
  var /= static_cast<double>(group.size() - 1);
  if (!(var > 0)) return {kShapeCap, kShapeCap / m};
  const double a = std::min(m * m / var, kShapeCap);
  return {a, a / m};
}

struct EmState {
  std::vector<GammaComponent> comp;
  std::vector<double> weight;
  std::vector<std::vector<double>> resp;
  double ll = -std::numeric_limits<double>::infinity();
};

double e_step(std::span<const double> x, std::span<const double> log_x, EmState& st) {
  const auto k = st.comp.size();
  double ll = 0.0;
  std::vector<double> lp(k);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      lp[j] = st.weight[j] > 0 ? std::log(st.weight[j]) + gamma_log_pdf(x[i], log_x[i], st.comp[j])
                               : -std::numeric_limits<double>::infinity();
      mx = std::max(mx, lp[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(lp[j] - mx);
    ll += mx + std::log(sum);
    for (std::size_t j = 0; j < k; ++j) st.resp[i][j] = std::exp(lp[j] - mx) / sum;
  }
  return ll;
}

void m_step(std::span<const double> x, std::span<const double> log_x, EmState& st) {
  const auto n = static_cast<double>(x.size());
  for (std::size_t j = 0; j < st.comp.size(); ++j) {
    double nk = 0.0;
    double sx = 0.0;
    double slx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      nk += st.resp[i][j];
      sx += st.resp[i][j] * x[i];
      slx += st.resp[i][j] * log_x[i];
    }
    st.weight[j] = nk / n;
    if (nk < 1e-10) continue;  // starved component keeps its parameters
    const double mean = sx / nk;
    const double a = solve_shape(std::log(mean) - slx / nk);
    st.comp[j] = {a, a / mean};
  }
}

EmState run_em(std::span<const double> x, std::span<const double> log_x, EmState st, const Priors& priors) {
  st.resp.assign(x.size(), std::vector<double>(st.comp.size(), 0.0));
  double prev = e_step(x, log_x, st);
  for (int it = 0; it < priors.em_max_iter; ++it) {
    m_step(x, log_x, st);
    const double ll = e_step(x, log_x, st);
    const bool done = std::abs(ll - prev) <= priors.em_tol * std::max(1.0, std::abs(prev));
    prev = ll;
    if (done) break;
  }
  st.ll = prev;
  return st;
}

EmState initial_state(std::span<const double> sorted, std::size_t k, bool quantile, const GammaComponent& single,
                      Rng& rng) {
  EmState st;
  st.comp.resize(k);
  st.weight.assign(k, 1.0 / static_cast<double>(k));
  const auto n = sorted.size();
  if (quantile) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto lo = j * n / k;
      const auto hi = (j + 1) * n / k;
      st.comp[j] = moment_match(sorted.subspan(lo, hi - lo), single);
    }
    return st;
  }
  // Random distinct centers, nearest-center groups in log space.
  std::vector<double> centers;
  for (std::size_t j = 0; j < k; ++j) {
    centers.push_back(sorted[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  }
  std::sort(centers.begin(), centers.end());
  std::vector<std::vector<double>> groups(k);
  for (double v : sorted) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (std::abs(std::log(v / centers[j])) < std::abs(std::log(v / centers[best]))) best = j;
    }
    groups[best].push_back(v);
  }
  for (std::size_t j = 0; j < k; ++j) {
    st.comp[j] = moment_match(groups[j], {single.shape, single.shape / centers[j]});
  }
  return st;
}

}  // namespace

GammaMixtureFit fit_gamma_mixture(std::span<const double> values, const Priors& priors, Rng& rng) {
  if (values.empty()) fail(Errc::EmptyDataset, "no values to fit");
  if (values.size() < kMixtureComponents) {
    fail(Errc::InvalidArgument, "mixture fit needs at least " + std::to_string(kMixtureComponents) + " values");
  }
  for (double v : values) {
    if (!(v > 0) || !std::isfinite(v)) fail(Errc::InvalidArgument, "mixture values must be positive and finite");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> log_x(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) log_x[i] = std::log(values[i]);

  // Single-Gamma MLE: the K=1 fit and the filler for unused slots.
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  const double mean_log = std::accumulate(log_x.begin(), log_x.end(), 0.0) / static_cast<double>(values.size());
  const double a1 = solve_shape(std::log(mean) - mean_log);
  const GammaComponent single{a1, a1 / mean};

  const double n = static_cast<double>(values.size());
  EmState best;
  double best_bic = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= kMixtureComponents; ++k) {
    EmState best_k;
    for (int r = 0; r < priors.em_restarts; ++r) {
      auto st = run_em(values, log_x, initial_state(sorted, k, r == 0, single, rng), priors);
      if (st.ll > best_k.ll) best_k = std::move(st);
      if (k == 1) break;  // restarts cannot change a single-component fit
    }
    // Components that lost all mass do not count as parameters.
    std::size_t used = 0;
    for (double w : best_k.weight) used += w > 1e-6 ? 1 : 0;
    const double bic = -2.0 * best_k.ll + static_cast<double>(3 * used - 1) * std::log(n);
    if (bic < best_bic - 1e-9) {
      best_bic = bic;
      best = std::move(best_k);
    }
  }

  // Pad to three slots, then order by component mean.
  const std::size_t active = best.comp.size();
  while (best.comp.size() < kMixtureComponents) {
    best.comp.push_back(single);
    best.weight.push_back(0.0);
  }
  std::array<std::size_t, kMixtureComponents> perm{};
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](auto a, auto b) {
    if (best.comp[a].mean() != best.comp[b].mean()) return best.comp[a].mean() < best.comp[b].mean();
    return best.weight[a] > best.weight[b];
  });

  GammaMixtureFit fit;
  fit.active = active;
  fit.log_likelihood = best.ll;
  double wsum = 0.0;
  for (std::size_t j = 0; j < kMixtureComponents; ++j) {
    fit.components[j] = best.comp[perm[j]];
    fit.weights[j] = best.weight[perm[j]];
    wsum += fit.weights[j];
  }
  for (auto& w : fit.weights) w /= wsum;
  fit.responsibilities.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = 0; j < kMixtureComponents; ++j) {
      fit.responsibilities[i][j] = perm[j] < active ? best.resp[i][perm[j]] : 0.0;
    }
  }
  return fit;
}

}  // namespace gridsynth
