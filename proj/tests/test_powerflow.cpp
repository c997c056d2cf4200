#include <gtest/gtest.h>

#include <cmath>

#include "gridsynth/error.hpp"
#include "gridsynth/powerflow.hpp"
#include "support/fixtures.hpp"

using namespace gridsynth;

namespace {

constexpr std::uint8_t kAbc = 7;

ThreePhaseNetwork two_bus(cplx z, cplx s_load, std::uint8_t mask = kAbc) {
  ThreePhaseNetwork net;
  net.add_bus(1.0, kAbc);
  net.add_bus(1.0, mask);
  net.sources = {0};
  PfBranch br{0, 1, {z, z, z}, mask};
  net.branches.push_back(br);
  for (int c = 0; c < 3; ++c) {
    if ((mask >> c) & 1u) net.injection[1][static_cast<std::size_t>(c)] = -s_load;
  }
  return net;
}

// Random radial network of n buses with subset-consistent conductor masks.
ThreePhaseNetwork random_tree(std::size_t n, Rng& rng) {
  ThreePhaseNetwork net;
  net.add_bus(1.0, kAbc);
  net.sources = {0};
  for (std::size_t b = 1; b < n; ++b) {
    const auto parent = std::uniform_int_distribution<std::size_t>(0, b - 1)(rng);
    std::uint8_t m = 0;
    while (m == 0) m = static_cast<std::uint8_t>(net.mask[parent] & std::uniform_int_distribution<int>(1, 7)(rng));
    net.add_bus(1.0, m);
    PfBranch br{parent, b, {}, m};
    for (auto& z : br.z) z = {0.005 + 0.03 * uniform01(rng), 0.002 + 0.02 * uniform01(rng)};
    net.branches.push_back(br);
    for (std::size_t c = 0; c < 3; ++c) {
      if ((m >> c) & 1u) net.injection[b][c] = {-0.4 * uniform01(rng), -0.15 * uniform01(rng)};
    }
  }
  return net;
}

double max_diff(const PFResult& r, const std::vector<Phasor3>& ref) {
  double d = 0.0;
  for (std::size_t b = 0; b < ref.size(); ++b) {
    for (std::size_t c = 0; c < 3; ++c) d = std::max(d, std::abs(r.voltage[b][c] - ref[b][c]));
  }
  return d;
}

}  // namespace

TEST(Fbs, TwoBusResistiveLoadMatchesQuadratic) {
  // V = 1 - r P / V for a real V: V = (1 + sqrt(1 - 4 r P)) / 2.
  const double r = 0.1, p = 0.5;
  const auto res = solve_fbs(two_bus(r, p), {1e-12, 200});
  ASSERT_TRUE(res.converged);
  const double expect = 0.5 * (1.0 + std::sqrt(1.0 - 4.0 * r * p));
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(std::abs(res.voltage[1][static_cast<std::size_t>(c)]), expect, 1e-10);
    EXPECT_NEAR(std::arg(res.voltage[1][static_cast<std::size_t>(c)]), std::arg(source_voltage(c)), 1e-10);
  }
}

TEST(Fbs, TwoBusGenerationRaisesVoltage) {
  // Injection P: V = 1 + r P / V, V = (1 + sqrt(1 + 4 r P)) / 2.
  const double r = 0.2, p = 0.25;
  const auto res = solve_fbs(two_bus(r, -p, 1), {1e-12, 200});
  ASSERT_TRUE(res.converged);
  EXPECT_NEAR(std::abs(res.voltage[1][0]), 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * r * p)), 1e-10);
  EXPECT_EQ(res.voltage[1][1], cplx{});
  EXPECT_EQ(res.voltage[1][2], cplx{});
}

TEST(Fbs, MatchesIndependentFixedPointOnSmallTrees) {
  auto rng = make_stream(5, 0, 77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = std::uniform_int_distribution<std::size_t>(2, 4)(rng);
    const auto net = random_tree(n, rng);
    const auto res = solve_fbs(net, {1e-13, 500});
    ASSERT_TRUE(res.converged) << trial;
    const auto ref = fixtures::fixed_point_voltages(net);
    EXPECT_LT(max_diff(res, ref), 1e-8) << "trial " << trial << " n " << n;
  }
}

TEST(Fbs, ForestWithTwoSources) {
  auto rng = make_stream(6, 0, 77);
  auto a = random_tree(4, rng);
  const auto b = random_tree(3, rng);
  const auto off = a.size();
  for (std::size_t i = 0; i < b.size(); ++i) {
    a.add_bus(1.0, b.mask[i]);
    a.injection[off + i] = b.injection[i];
  }
  for (auto br : b.branches) {
    br.from += off;
    br.to += off;
    a.branches.push_back(br);
  }
  a.sources.push_back(off);
  const auto res = solve_fbs(a, {1e-13, 500});
  ASSERT_TRUE(res.converged);
  EXPECT_LT(max_diff(res, fixtures::fixed_point_voltages(a)), 1e-8);
}

TEST(Fbs, NonConvergenceIsAResult) {
  // r P > 1/4 has no real solution: the sweep must report, not throw.
  const auto res = solve_fbs(two_bus(1.0, 1.0), {1e-8, 50});
  EXPECT_FALSE(res.converged);
  EXPECT_LE(res.iterations, 50);  // a blow-up ends the sweep early
  EXPECT_FALSE(in_band(res, {}));
  const auto capped = solve_fbs(two_bus(0.1, 0.5), {1e-14, 1});
  EXPECT_FALSE(capped.converged);
}

TEST(Fbs, LoopRejected) {
  auto net = two_bus(0.1, 0.1);
  net.add_bus(1.0, kAbc);
  net.branches.push_back({1, 2, {0.1, 0.1, 0.1}, kAbc});
  net.branches.push_back({2, 0, {0.1, 0.1, 0.1}, kAbc});
  EXPECT_THROW(solve_fbs(net), Error);
}

TEST(PfNetwork, PerUnitConversionOnStar) {
  const auto topo = fixtures::star_topology(1, 0.22, 0.05);
  GridSample s;
  s.topology_hash = topology_hash(topo);
  s.buses.resize(topo.buses.size());
  s.lines.resize(topo.branches.size());
  const std::size_t load = topo.branches[0].to;
  s.buses[topo.branches[0].from].phase = Phase::ABC;
  s.buses[load].phase = Phase::B;
  s.buses[load].p_kw = {0.0, 2.0, 0.0};
  s.buses[load].q_kvar = {0.0, 0.5, 0.0};
  s.lines[0] = {0.1, 0.05};
  const auto net = build_pf_network(s, topo, 1.0);
  ASSERT_EQ(net.size(), topo.buses.size());
  const double z_base = 0.22 * 0.22 / 1.0;
  ASSERT_EQ(net.branches.size(), 1u);
  EXPECT_EQ(net.branches[0].mask, 2);
  EXPECT_NEAR(net.branches[0].z[1].real(), 0.1 / z_base, 1e-12);
  EXPECT_NEAR(net.branches[0].z[1].imag(), 0.05 / z_base, 1e-12);
  // Single-phase base is a third of the three-phase base.
  EXPECT_NEAR(net.injection[load][1].real(), -2.0 / (1000.0 / 3.0), 1e-15);
  EXPECT_NEAR(net.injection[load][1].imag(), -0.5 / (1000.0 / 3.0), 1e-15);
  EXPECT_EQ(net.mask[load], 2);
  auto bad = s;
  bad.topology_hash = "0000";
  EXPECT_THROW(build_pf_network(bad, topo), Error);
}

TEST(PfNetwork, LatticeSampleSolvesAndMatchesOracleOnSubtree) {
  fixtures::LatticeSpec spec;
  spec.rows = 6;
  spec.cols = 6;
  spec.spacing_m = 40.0;
  const auto topo = fixtures::lattice_topology(spec);
  const auto e = generate_ensemble(topo, default_models(5, 50), 5, 3);
  for (const auto& s : e.samples) {
    const auto net = build_pf_network(s, topo);
    const auto res = solve_fbs(net, {1e-12, 200});
    ASSERT_TRUE(res.converged);
    EXPECT_LT(max_diff(res, fixtures::fixed_point_voltages(net, 1e-14, 2000)), 1e-8);
    for (std::size_t b = 0; b < net.size(); ++b) EXPECT_EQ(res.mask[b], net.mask[b]);
  }
}

TEST(Summary, BandHistogramAndCsv) {
  std::vector<PFResult> rs;
  rs.push_back(solve_fbs(two_bus(0.1, 0.5), {1e-12, 100}));   // 0.947, inside
  rs.push_back(solve_fbs(two_bus(0.2, 0.6), {1e-12, 100}));   // about 0.861, outside
  rs.push_back(solve_fbs(two_bus(1.0, 1.0), {1e-8, 20}));     // diverges
  const auto st = summarize_voltages(rs, {0.9, 1.1}, {0.75, 1.35, 6});
  EXPECT_EQ(st.samples, 3u);
  EXPECT_NEAR(st.convergence_rate, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(st.in_band_fraction, 1.0 / 3.0, 1e-15);
  const double v2 = 0.5 * (1.0 + std::sqrt(1.0 - 4.0 * 0.2 * 0.6));
  EXPECT_NEAR(st.min[0], v2, 1e-9);
  EXPECT_NEAR(st.max[0], 1.0, 1e-12);
  // Converged results only: per phase 2 buses x 2 samples.
  for (const auto& h : st.histogram) {
    std::size_t total = 0;
    for (auto c : h) total += c;
    EXPECT_EQ(total, 4u);
    EXPECT_EQ(h[2], 2u);  // sources at 1.0
    EXPECT_EQ(h[1], 2u);  // loads at 0.947 and 0.861
  }
  const auto csv = render_validation_csv(rs, {0.9, 1.1});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "sample_idx,converged,iterations,min_a,max_a,min_b,max_b,min_c,max_c,in_band");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const auto h = render_histogram_csv(st);
  EXPECT_EQ(h.substr(0, h.find('\n')), "bin_lo,bin_hi,count_a,count_b,count_c");
  EXPECT_EQ(std::count(h.begin(), h.end(), '\n'), 7);
  EXPECT_NE(render_histogram_svg(st).find("<svg"), std::string::npos);
  EXPECT_THROW(summarize_voltages(std::span<const PFResult>{}), Error);
}

TEST(Summary, PhaseExtremaNanWhenPhaseAbsent) {
  const auto r = solve_fbs(two_bus(0.1, 0.1, 1));
  ThreePhaseNetwork net;
  net.add_bus(1.0, 1);
  net.sources = {0};
  const auto only_a = solve_fbs(net);
  const auto ex = phase_extrema(only_a);
  EXPECT_NEAR(ex.min[0], 1.0, 1e-15);
  EXPECT_TRUE(std::isnan(ex.min[1]));
  EXPECT_TRUE(std::isnan(ex.max[2]));
  EXPECT_TRUE(r.converged);
}
