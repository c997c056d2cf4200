#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gridsynth/error.hpp"
#include "gridsynth/phase.hpp"
#include "gridsynth/random.hpp"
#include "gridsynth/util.hpp"

using namespace gridsynth;

TEST(Phase, MasksFollowCategoryOrder) {
  const std::uint8_t want[] = {1, 2, 4, 3, 6, 5, 7};
  for (std::size_t i = 0; i < kPhaseCategories; ++i) EXPECT_EQ(conductor_mask(kAllPhases[i]), want[i]);
  EXPECT_EQ(conductor_count(Phase::AC), 2);
  EXPECT_EQ(phase_from_mask(5), Phase::AC);
  EXPECT_THROW(phase_from_mask(0), Error);
}

TEST(Phase, SubsetRuleByBruteForce) {
  for (auto c : kAllPhases) {
    for (auto p : kAllPhases) {
      bool subset = true;
      for (int k = 0; k < 3; ++k) {
        if (has_conductor(c, k) && !has_conductor(p, k)) subset = false;
      }
      EXPECT_EQ(is_subset(c, p), subset) << to_string(c) << " vs " << to_string(p);
    }
  }
  EXPECT_EQ(PhaseSet::subsets_of(Phase::ABC), PhaseSet::all());
  EXPECT_EQ(PhaseSet::subsets_of(Phase::AB).size(), 3);
  EXPECT_EQ(PhaseSet::subsets_of(Phase::C).size(), 1);
}

TEST(Phase, NamesRoundTrip) {
  for (auto p : kAllPhases) EXPECT_EQ(parse_phase(to_string(p)), p);
  EXPECT_THROW(parse_phase("AD"), Error);
}

TEST(Random, StreamsAreIndependentOfEachOther) {
  auto a = make_stream(7, 0, 1);
  auto b = make_stream(7, 1, 1);
  auto a2 = make_stream(7, 0, 1);
  EXPECT_NE(a(), b());
  a = make_stream(7, 0, 1);
  EXPECT_EQ(a(), a2());
}

TEST(Random, GammaMomentsMatchShapeRate) {
  auto rng = make_stream(3);
  const int n = 200000;
  double s = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    const double x = gamma_shape_rate(rng, 4.0, 2.0);
    s += x;
    ss += x * x;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 2.0, 0.02);
  EXPECT_NEAR(ss / n - mean * mean, 1.0, 0.03);
}

TEST(Random, TruncatedNormalMeanMatchesClosedForm) {
  // E[X | X >= 0] = mu + sd * phi(a) / (1 - Phi(a)), a = -mu / sd
  auto rng = make_stream(5);
  const double mu = 0.5, sd = 1.0;
  double s = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = truncated_normal_nonneg(rng, mu, sd);
    ASSERT_GE(x, 0.0);
    s += x;
  }
  const double a = -mu / sd;
  const double phi = std::exp(-0.5 * a * a) / std::sqrt(2 * 3.14159265358979323846);
  const double tail = 0.5 * std::erfc(a / std::sqrt(2.0));
  EXPECT_NEAR(s / n, mu + sd * phi / tail, 0.01);
}

TEST(Random, NegativeBinomialMeanAndVariance) {
  // Var = mu + mu^2 / alpha
  auto rng = make_stream(11);
  const double mu = 3.0, alpha = 1.5;
  const int n = 200000;
  double s = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    const double x = static_cast<double>(negative_binomial(rng, mu, alpha));
    s += x;
    ss += x * x;
  }
  const double m = s / n;
  EXPECT_NEAR(m, mu, 0.03);
  EXPECT_NEAR(ss / n - m * m, mu + mu * mu / alpha, 0.15);
}

TEST(Random, WeibullMeanUsesGammaFunction) {
  auto rng = make_stream(13);
  double s = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) s += weibull(rng, 0.9, 3.0);
  EXPECT_NEAR(s / n, 3.0 * std::tgamma(1 + 1 / 0.9), 0.04);
}

TEST(Random, DirichletAndCategorical) {
  auto rng = make_stream(17);
  const double conc[] = {2.0, 6.0, 2.0};
  double s1 = 0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const auto d = dirichlet(rng, conc);
    EXPECT_NEAR(std::accumulate(d.begin(), d.end(), 0.0), 1.0, 1e-12);
    s1 += d[1];
  }
  EXPECT_NEAR(s1 / n, 0.6, 0.005);
  const double w[] = {0.0, 1.0, 0.0};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(categorical(rng, w), 1u);
}

TEST(Util, SignificantDigitsAndParsing) {
  EXPECT_EQ(format_sig(0.123456789, 6), "0.123457");
  EXPECT_EQ(format_sig(138.0, 6), "138");
  EXPECT_EQ(format_sig(13.8, 6), "13.8");
  bool ok = true;
  parse_double("abc", &ok);
  EXPECT_FALSE(ok);
  EXPECT_DOUBLE_EQ(parse_double("+2.5"), 2.5);
  EXPECT_THROW(parse_double("1.5x"), Error);
  EXPECT_EQ(content_hash("a"), content_hash("a"));
  EXPECT_NE(content_hash("a"), content_hash("b"));
  EXPECT_EQ(content_hash("").size(), 16u);
}
