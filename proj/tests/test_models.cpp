#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gridsynth/error.hpp"
#include "gridsynth/models.hpp"
#include "support/fixtures.hpp"

using namespace gridsynth;

namespace {

McmcConfig quick_cfg(std::uint64_t seed = 3) {
  McmcConfig cfg;
  cfg.steps = 6000;
  cfg.burn_in = 3000;
  cfg.thin = 10;
  cfg.n_draws_kept = 300;
  cfg.seed = seed;
  return cfg;
}

template <typename F>
double mean_over(std::size_t n, F f) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += f(i);
  return s / static_cast<double>(n);
}

}  // namespace

TEST(Records, BusCsvRoundTrip) {
  BusRecord a;
  a.bus_id = "x1";
  a.distance_km = 1.25;
  a.phase = Phase::AB;
  a.p_kw = {1.5, 2.25, 0.0};
  a.interruptions_per_year = 3;
  a.interruption_durations_h = {0.5, 4.0};
  BusRecord b;
  b.bus_id = "x2";
  b.hop_zone = 2;
  b.phase = Phase::C;
  b.p_kw = {0.0, 0.0, 0.7};
  b.building_scale = 2.0;
  const std::vector<BusRecord> in = {a, b};
  const auto csv = render_bus_records(in);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "bus_id,distance_km,hop_zone,phase,p_kw_a,p_kw_b,p_kw_c,interruptions_per_year,"
            "interruption_durations_h,building_scale");
  const auto out = parse_bus_records(csv);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].bus_id, "x1");
  EXPECT_EQ(out[0].distance_km, 1.25);
  EXPECT_FALSE(out[0].hop_zone);
  EXPECT_EQ(out[0].phase, Phase::AB);
  EXPECT_EQ(out[0].p_kw, a.p_kw);
  EXPECT_EQ(out[0].interruption_durations_h, a.interruption_durations_h);
  EXPECT_EQ(out[1].hop_zone, 2);
  EXPECT_FALSE(out[1].distance_km);
  EXPECT_EQ(out[1].building_scale, 2.0);
  EXPECT_EQ(render_bus_records(out), csv);
}

TEST(Records, BusCsvRejectsBadRows) {
  const std::string header = "bus_id,hop_zone,phase,p_kw_a,p_kw_b,p_kw_c\n";
  EXPECT_NO_THROW(parse_bus_records(header + "a,1,A,1,0,0\n"));
  auto code = [&](const std::string& body) {
    try {
      parse_bus_records(header + body);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::InvalidArgument;
  };
  EXPECT_EQ(code("a,1,A,0,1,0\n"), Errc::SchemaMismatch);   // power on a missing conductor
  EXPECT_EQ(code("a,1,A,-1,0,0\n"), Errc::SchemaMismatch);  // negative power
  EXPECT_EQ(code("a,1.5,A,1,0,0\n"), Errc::SchemaMismatch);
  EXPECT_EQ(code("a,1,A,x,0,0\n"), Errc::SchemaMismatch);
  EXPECT_EQ(code("a,1,A,1,0\n"), Errc::SchemaMismatch);
  EXPECT_THROW(parse_bus_records("bus_id,phase,p_kw_a,p_kw_b,p_kw_c\na,A,1,0,0\n"), Error);
}

TEST(Records, LineCsvRoundTripAndChecks) {
  LineRecord l;
  l.line_id = "l1";
  l.from_bus = "a";
  l.to_bus = "b";
  l.length_km = 0.3;
  l.r1_ohm = 0.12;
  l.x1_ohm = 0.08;
  l.hop_zone = 1;
  const std::vector<LineRecord> in = {l};
  const auto csv = render_line_records(in);
  const auto out = parse_line_records(csv);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].r1_ohm, 0.12);
  EXPECT_EQ(out[0].x1_ohm, 0.08);
  EXPECT_EQ(render_line_records(out), csv);
  EXPECT_THROW(parse_line_records("line_id,length_km,r1_ohm,x1_ohm,hop_zone\nl,0,1,1,1\n"), Error);
  EXPECT_THROW(parse_line_records("line_id,length_km,r1_ohm,x1_ohm,hop_zone\nl,1,0,0,1\n"), Error);
}

TEST(Records, TrainingZonesFromDistanceAndHops) {
  std::vector<std::optional<int>> hz = {std::nullopt, std::nullopt, std::nullopt, 0, 3};
  std::vector<std::optional<double>> d = {0.0, 4.9, 10.0, std::nullopt, 2.0};
  const auto z = training_zones(hz, d, 3);
  // Distances scale to the dataset maximum (10 km): floor(3 d / 10) + 1, clamped.
  EXPECT_EQ(z, (std::vector<int>{1, 2, 3, 1, 3}));
  hz[4] = 4;
  EXPECT_THROW(training_zones(hz, d, 3), Error);
  EXPECT_THROW(training_zones(hz, d, 0), Error);
}

TEST(Priors, ParseOverridesAndRejectsUnknown) {
  const auto p = parse_priors(R"({"dirichlet": 2.5, "em_restarts": 4, "beta_a": 3})");
  EXPECT_EQ(p.dirichlet, 2.5);
  EXPECT_EQ(p.em_restarts, 4);
  EXPECT_EQ(p.beta_a, 3.0);
  EXPECT_EQ(p.beta_b, Priors{}.beta_b);
  EXPECT_THROW(parse_priors(R"({"dirichlett": 1})"), Error);
  EXPECT_THROW(parse_priors("[1, 2]"), Error);
  EXPECT_THROW(parse_priors("{"), Error);
}

TEST(GammaMixture, RecoversWellSeparatedComponents) {
  auto rng = make_stream(11, 0, 1);
  std::vector<double> x;
  const std::array<GammaComponent, 3> truth = {{{40.0, 200.0}, {40.0, 40.0}, {40.0, 8.0}}};  // means 0.2, 1, 5
  const MixWeights w = {0.5, 0.3, 0.2};
  for (int i = 0; i < 3000; ++i) {
    const auto k = categorical(rng, w);
    x.push_back(gamma_shape_rate(rng, truth[k].shape, truth[k].rate));
  }
  auto fit_rng = make_stream(12, 0, 1);
  const auto fit = fit_gamma_mixture(x, Priors{}, fit_rng);
  EXPECT_EQ(fit.active, 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(fit.components[k].mean(), truth[k].mean(), 0.05 * truth[k].mean()) << k;
    EXPECT_NEAR(fit.weights[k], w[k], 0.03) << k;
  }
  ASSERT_EQ(fit.responsibilities.size(), x.size());
  for (const auto& r : fit.responsibilities) EXPECT_NEAR(r[0] + r[1] + r[2], 1.0, 1e-9);
}

TEST(GammaMixture, SingleGammaSelectedForUnimodalData) {
  auto rng = make_stream(13, 0, 1);
  std::vector<double> x;
  for (int i = 0; i < 2000; ++i) x.push_back(gamma_shape_rate(rng, 8.0, 4.0));
  auto fit_rng = make_stream(14, 0, 1);
  const auto fit = fit_gamma_mixture(x, Priors{}, fit_rng);
  EXPECT_EQ(fit.active, 1u);
  const double sum_w = fit.weights[0] + fit.weights[1] + fit.weights[2];
  EXPECT_NEAR(sum_w, 1.0, 1e-12);
  double m = 0.0;
  for (std::size_t k = 0; k < 3; ++k) m += fit.weights[k] * fit.components[k].mean();
  EXPECT_NEAR(m, 2.0, 0.05);
}

TEST(Conjugates, DirichletConcentrationIsPriorPlusCounts) {
  fixtures::PowerTruth t;
  t.zones = 2;
  t.c = {Simplex7{0.4, 0.3, 0.2, 0.05, 0.03, 0.01, 0.01}, Simplex7{0.2, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1}};
  t.p_pot = {{2.0, 4.0, 8.0}, {2.5, 5.0, 9.0}};
  const auto recs = fixtures::simulate_power_records(t, 150, 5);
  Priors pri;
  pri.dirichlet = 0.7;
  const auto post = learn_power(recs, 2, pri, quick_cfg());
  std::vector<Simplex7> counts(2, Simplex7{});
  for (const auto& r : recs) counts[static_cast<std::size_t>(*r.hop_zone - 1)][index_of(r.phase)] += 1.0;
  for (std::size_t z = 0; z < 2; ++z) {
    for (std::size_t k = 0; k < kPhaseCategories; ++k) {
      EXPECT_EQ(post.concentration[z][k], 0.7 + counts[z][k]) << z << "," << k;
    }
  }
  EXPECT_NO_THROW(validate(post));
}

TEST(Conjugates, BetaCountsBusesWithAndWithoutInterruptions) {
  fixtures::ReliabilityTruth t;
  t.zones = 2;
  t.mu = {2.0, 4.0};
  t.p = {0.3, 0.7};
  t.weibull = {{1.0, 2.0}, {1.0, 2.0}};
  const auto recs = fixtures::simulate_reliability_records(t, 200, 6);
  Priors pri;
  pri.beta_a = 2.0;
  pri.beta_b = 0.5;
  const auto post = learn_duration(recs, 2, pri, quick_cfg());
  for (std::size_t z = 0; z < 2; ++z) {
    double with = 0.0, without = 0.0;
    for (const auto& r : recs) {
      if (static_cast<std::size_t>(*r.hop_zone - 1) != z) continue;
      (r.interruption_durations_h.empty() ? without : with) += 1.0;
    }
    EXPECT_EQ(post.beta[z][0], 2.0 + with);
    EXPECT_EQ(post.beta[z][1], 0.5 + without);
  }
}

TEST(Conjugates, MixtureConcentrationAddsSoftCounts) {
  fixtures::ImpedanceTruth t;
  t.zones = 2;
  t.gamma_r = {{{30.0, 150.0}, {30.0, 60.0}, {30.0, 30.0}}};
  t.gamma_rho = {{{30.0, 60.0}, {30.0, 30.0}, {30.0, 15.0}}};
  t.w_r = {{0.6, 0.3, 0.1}, {0.1, 0.3, 0.6}};
  t.w_rho = {{0.3, 0.4, 0.3}, {0.3, 0.4, 0.3}};
  const auto recs = fixtures::simulate_line_records(t, 250, 7);
  Priors pri;
  pri.mixture_concentration = 0.25;
  const auto post = learn_impedance(recs, 2, pri, quick_cfg());
  // Responsibilities sum to one per record, so each row totals 3 a0 + n_z.
  for (std::size_t z = 0; z < 2; ++z) {
    const auto& cr = post.concentration_r[z];
    const auto& cx = post.concentration_rho[z];
    EXPECT_NEAR(cr[0] + cr[1] + cr[2], 0.75 + 250.0, 1e-9);
    EXPECT_NEAR(cx[0] + cx[1] + cx[2], 0.75 + 250.0, 1e-9);
    for (double a : cr) EXPECT_GE(a, 0.25);
  }
  // Zone 1 lines are mostly low resistance, zone 2 mostly high.
  EXPECT_GT(post.concentration_r[0][0], post.concentration_r[0][2]);
  EXPECT_GT(post.concentration_r[1][2], post.concentration_r[1][0]);
}

TEST(Conjugates, ZeroImpedanceLinesAreSkipped) {
  std::vector<LineRecord> recs;
  for (int i = 0; i < 60; ++i) {
    LineRecord l;
    l.line_id = "l" + std::to_string(i);
    l.length_km = 0.1;
    l.r1_ohm = 0.02 + 0.001 * i;
    l.x1_ohm = i < 5 ? 0.0 : 0.01 + 0.0005 * i;
    l.hop_zone = 1;
    recs.push_back(l);
  }
  LearnReport rep;
  const auto post = learn_impedance(recs, 1, Priors{}, quick_cfg(), &rep);
  EXPECT_EQ(rep.skipped_records, 5u);
  const auto& c = post.concentration_r[0];
  EXPECT_NEAR(c[0] + c[1] + c[2], 1.5 + 55.0, 1e-9);
}

TEST(Learn, PowerRecoversTruth) {
  fixtures::PowerTruth t;
  t.zones = 3;
  for (int z = 0; z < 3; ++z) {
    t.c.push_back(Simplex7{0.45 - 0.1 * z, 0.25, 0.2 + 0.1 * z, 0.03, 0.04, 0.02, 0.01});
    t.p_pot.push_back({2.0 + 0.5 * z, 4.0 + z, 8.0 + 1.5 * z});
  }
  t.sigma = 0.4;
  const auto recs = fixtures::simulate_power_records(t, 2000, 21);
  const auto post = learn_power(recs, 3, Priors{}, quick_cfg());
  ASSERT_FALSE(post.draws.empty());
  for (std::size_t z = 0; z < 3; ++z) {
    for (std::size_t k = 0; k < 3; ++k) {
      const double m = mean_over(post.draws.size(), [&](std::size_t i) { return post.draws[i].p_pot[z][k]; });
      EXPECT_NEAR(m, t.p_pot[z][k], 0.10 * t.p_pot[z][k]) << "zone " << z << " k " << k;
    }
    for (std::size_t k = 0; k < 3; ++k) {
      const double m = mean_over(post.draws.size(), [&](std::size_t i) { return post.draws[i].c[z][k]; });
      EXPECT_NEAR(m, t.c[z][k], 0.10 * t.c[z][k]) << "zone " << z << " phase " << k;
    }
  }
  const double s = mean_over(post.draws.size(), [&](std::size_t i) { return post.draws[i].sigma_p; });
  EXPECT_NEAR(s, 0.4, 0.04);
}

TEST(Learn, FrequencyAndDurationRecoverTruth) {
  fixtures::ReliabilityTruth t;
  t.zones = 3;
  t.mu = {1.5, 3.0, 6.0};
  t.alpha = 2.0;
  t.p = {0.4, 0.6, 0.8};
  t.weibull = {{0.9, 2.0}, {1.2, 3.0}, {1.5, 5.0}};
  const auto recs = fixtures::simulate_reliability_records(t, 2000, 22);
  const auto freq = learn_frequency(recs, 3, Priors{}, quick_cfg());
  const auto dur = learn_duration(recs, 3, Priors{}, quick_cfg());
  for (std::size_t z = 0; z < 3; ++z) {
    const double mu = mean_over(freq.draws.size(), [&](std::size_t i) { return freq.draws[i].mu[z]; });
    EXPECT_NEAR(mu, t.mu[z], 0.10 * t.mu[z]) << z;
    const double p = mean_over(dur.draws.size(), [&](std::size_t i) { return dur.draws[i].p[z]; });
    EXPECT_NEAR(p, t.p[z], 0.10 * t.p[z]) << z;
    const double wm = mean_over(dur.draws.size(), [&](std::size_t i) { return dur.draws[i].weibull[z].mean(); });
    EXPECT_NEAR(wm, t.weibull[z].mean(), 0.10 * t.weibull[z].mean()) << z;
  }
  const double a = mean_over(freq.draws.size(), [&](std::size_t i) { return freq.draws[i].alpha; });
  EXPECT_NEAR(a, 2.0, 0.2 * 2.0);
}

TEST(Learn, ErrorsAndDeterminism) {
  std::vector<BusRecord> none;
  EXPECT_THROW(learn_power(none, 2, Priors{}, quick_cfg()), Error);
  std::vector<BusRecord> zeros(10);
  for (auto& r : zeros) {
    r.hop_zone = 1;
    r.phase = Phase::A;
  }
  try {
    learn_power(zeros, 1, Priors{}, quick_cfg());
    FAIL() << "expected AllZeroPower";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::AllZeroPower);
  }
  fixtures::PowerTruth t;
  t.zones = 1;
  t.c = {Simplex7{0.4, 0.3, 0.2, 0.04, 0.03, 0.02, 0.01}};
  t.p_pot = {{2.0, 4.0, 8.0}};
  const auto recs = fixtures::simulate_power_records(t, 100, 9);
  EXPECT_EQ(learn_power(recs, 1, Priors{}, quick_cfg(5)), learn_power(recs, 1, Priors{}, quick_cfg(5)));
  EXPECT_NE(learn_power(recs, 1, Priors{}, quick_cfg(5)), learn_power(recs, 1, Priors{}, quick_cfg(6)));
}

TEST(Defaults, PhaseSharesMatchReferenceTable) {
  const double percent[] = {39.93, 29.64, 26.46, 0.82, 2.37, 0.65, 0.12};
  const double total = std::accumulate(std::begin(percent), std::end(percent), 0.0);
  const auto s = default_phase_shares();
  for (std::size_t k = 0; k < kPhaseCategories; ++k) EXPECT_NEAR(s[k], percent[k] / total, 1e-12);
  // The shipped Dirichlet is centered on the same shares in every zone.
  const auto post = default_power_posterior(5, 200);
  EXPECT_NO_THROW(validate(post));
  for (const auto& c : post.concentration) {
    const double a0 = std::accumulate(c.begin(), c.end(), 0.0);
    for (std::size_t k = 0; k < kPhaseCategories; ++k) EXPECT_NEAR(c[k] / a0, s[k], 1e-12);
  }
}

TEST(Defaults, ExpectedResistanceToReactanceIsOnePointFive) {
  const auto post = default_impedance_posterior(3, 200);
  EXPECT_NO_THROW(validate(post));
  // For rho ~ Gamma(a, b), E[1/rho] = b / (a - 1).
  for (std::size_t z = 0; z < 3; ++z) {
    const auto& cx = post.concentration_rho[z];
    const double a0 = cx[0] + cx[1] + cx[2];
    double e = 0.0;
    for (std::size_t k = 0; k < 3; ++k) e += cx[k] / a0 * post.gamma_rho[k].rate / (post.gamma_rho[k].shape - 1.0);
    EXPECT_NEAR(e, 1.5, 1e-9) << z;
  }
  // Monte Carlo over attribute sampling agrees.
  auto rng = make_stream(1, 0, 2);
  double s = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto a = sample_line_attributes(post, 2, 0.1, static_cast<std::size_t>(i) % 200, rng);
    s += a.r1_ohm / a.x1_ohm;
  }
  EXPECT_NEAR(s / n, 1.5, 0.01);
}

TEST(Defaults, AllKindsValidateAndShapes) {
  for (int zones : {1, 5, 8}) {
    const auto f = default_frequency_posterior(zones, 50);
    const auto d = default_duration_posterior(zones, 50);
    EXPECT_NO_THROW(validate(f));
    EXPECT_NO_THROW(validate(d));
    EXPECT_EQ(f.draws.size(), 50u);
    EXPECT_EQ(d.beta.size(), static_cast<std::size_t>(zones));
  }
  EXPECT_EQ(default_power_posterior(), default_power_posterior());
}

TEST(Persistence, RoundTripEachKind) {
  const std::vector<AnyPosterior> all = {default_power_posterior(3, 20), default_impedance_posterior(3, 20),
                                         default_frequency_posterior(3, 20), default_duration_posterior(3, 20)};
  fixtures::TempDir dir("models");
  for (const auto& p : all) {
    const auto text = serialize_posterior(p);
    const auto back = parse_posterior(text);
    EXPECT_EQ(back, p);
    EXPECT_EQ(serialize_posterior(back), text);
    const auto path = dir / posterior_file_name(kind_of(p));
    save_posterior(p, path);
    EXPECT_EQ(load_posterior(path, kind_of(p)), p);
    EXPECT_EQ(zones_of(p), 3);
    EXPECT_EQ(draw_count(p), 20u);
  }
  EXPECT_EQ(posterior_file_name(ModelKind::power), "power.json");
}

TEST(Persistence, KindMismatchAndMissingFile) {
  fixtures::TempDir dir("models");
  const auto path = dir / "power.json";
  save_posterior(default_power_posterior(2, 10), path);
  try {
    load_posterior(path, ModelKind::duration);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ModelKindMismatch);
  }
  try {
    load_posterior(dir / "absent.json", ModelKind::power);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingFile);
  }
  EXPECT_EQ(zones_of(load_posterior("default", ModelKind::frequency, 4)), 4);
  EXPECT_THROW(parse_posterior(R"({"kind":"power","zones":1})"), Error);
}

TEST(Sampling, PhaseRespectsAllowedSet) {
  const auto post = default_power_posterior(2, 20);
  auto rng = make_stream(4, 0, 3);
  const PhaseSet allowed = PhaseSet::subsets_of(Phase::AB);
  for (int i = 0; i < 2000; ++i) {
    const auto p = sample_phase(post, 1, allowed, static_cast<std::size_t>(i) % 20, rng);
    EXPECT_TRUE(p == Phase::A || p == Phase::B || p == Phase::AB);
  }
  EXPECT_THROW(sample_phase(post, 3, allowed, 0, rng), Error);
  EXPECT_THROW(sample_phase(post, 1, allowed, 20, rng), Error);
}

TEST(Sampling, PowerOnlyOnActiveConductors) {
  const auto post = default_power_posterior(2, 20);
  auto rng = make_stream(4, 0, 4);
  for (auto ph : kAllPhases) {
    for (int i = 0; i < 50; ++i) {
      const auto p = sample_power(post, 2, ph, 1.0, static_cast<std::size_t>(i) % 20, rng);
      for (int c = 0; c < 3; ++c) {
        if (has_conductor(ph, c)) {
          EXPECT_GE(p[static_cast<std::size_t>(c)], 0.0);
        } else {
          EXPECT_EQ(p[static_cast<std::size_t>(c)], 0.0);
        }
      }
    }
  }
}
