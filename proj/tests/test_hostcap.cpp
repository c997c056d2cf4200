#include <gtest/gtest.h>

#include <cmath>

#include "gridsynth/error.hpp"
#include "gridsynth/hostcap.hpp"
#include "support/fixtures.hpp"

using namespace gridsynth;

namespace {

// Source plus one bus on `mask`, pure resistance r p.u., optional load p.u.
ThreePhaseNetwork two_bus(double r, std::uint8_t mask, double load = 0.0) {
  ThreePhaseNetwork net;
  net.add_bus(1.0, 7);
  net.add_bus(1.0, mask);
  net.sources = {0};
  net.branches.push_back({0, 1, {cplx(r), cplx(r), cplx(r)}, mask});
  for (std::size_t c = 0; c < 3; ++c) {
    if ((mask >> c) & 1u) net.injection[1][c] = -load;
  }
  return net;
}

// With only PV at the bus, V = 1 + r P / V hits hi at P = hi (hi - 1) / r per phase.
double analytic_hc_kw(double r, int phases, double irradiance, double hi = 1.1, double s_base_mva = 1.0) {
  const double p_phase = hi * (hi - 1.0) / r;
  return phases * p_phase * s_base_mva * 1000.0 / 3.0 / irradiance;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return Errc::InvalidArgument;
}

}  // namespace

TEST(HostingCapacity, TwoBusMatchesClosedForm) {
  const HcSearch search{0.0, 20000.0, 0.5};
  const std::size_t bus[] = {1};
  for (const auto& [r, mask, phases, g] : std::vector<std::tuple<double, std::uint8_t, int, double>>{
           {0.05, 1, 1, 1.0}, {0.05, 2, 1, 0.8}, {0.2, 7, 3, 0.6}, {0.1, 5, 2, 1.0}}) {
    const auto net = two_bus(r, mask);
    const double hc = injection_hosting_capacity(net, bus, g, {0.9, 1.1}, search, {1e-12, 200});
    const double truth = analytic_hc_kw(r, phases, g);
    EXPECT_LE(hc, truth + 1e-6) << r << " " << int(mask);
    EXPECT_GE(hc, truth - search.tol_kw) << r << " " << int(mask);
  }
}

TEST(HostingCapacity, EndpointFeasibility) {
  const HcSearch search{0.0, 5000.0, 1.0};
  const std::size_t bus[] = {1};
  const auto net = two_bus(0.08, 7, 0.05);
  const double hc = injection_hosting_capacity(net, bus, 0.9, {0.9, 1.1}, search);
  EXPECT_TRUE(pv_feasible(net, bus, hc, 0.9, {0.9, 1.1}));
  EXPECT_FALSE(pv_feasible(net, bus, hc + 2.0 * search.tol_kw, 0.9, {0.9, 1.1}));
}

TEST(HostingCapacity, MonotoneInImpedance) {
  const HcSearch search{0.0, 20000.0, 0.5};
  const std::size_t bus[] = {1};
  double prev = INFINITY;
  for (double r : {0.02, 0.04, 0.08, 0.16}) {
    const double hc = injection_hosting_capacity(two_bus(r, 7), bus, 1.0, {0.9, 1.1}, search);
    EXPECT_LT(hc, prev) << r;
    prev = hc;
  }
}

TEST(HostingCapacity, BracketEdgesAndErrors) {
  const std::size_t bus[] = {1};
  // Tiny impedance: even the top of the bracket fits.
  EXPECT_EQ(injection_hosting_capacity(two_bus(1e-6, 7), bus, 1.0, {}, {0.0, 100.0, 1.0}), 100.0);
  // Heavy base load below the band.
  EXPECT_EQ(code_of([&] { injection_hosting_capacity(two_bus(0.1, 7, 1.5), bus, 1.0, {}, {}); }),
            Errc::BaseCaseViolation);
  EXPECT_EQ(code_of([&] { injection_hosting_capacity(two_bus(0.1, 7), {}, 1.0, {}, {}); }), Errc::InvalidArgument);
  EXPECT_EQ(code_of([&] { injection_hosting_capacity(two_bus(0.1, 7), bus, 1.0, {}, {5.0, 5.0, 1.0}); }),
            Errc::InvalidArgument);
}

TEST(HostingCapacity, LoadScalingRaisesCapacity) {
  const std::size_t bus[] = {1};
  const auto net = two_bus(0.1, 1, 0.3);
  const auto light = scale_loads(net, 0.0);
  EXPECT_EQ(light.injection[1][0], cplx{});
  EXPECT_EQ(scale_loads(net, 2.0).injection[1][0], cplx(-0.6));
  const HcSearch s{0.0, 5000.0, 0.5};
  EXPECT_GT(injection_hosting_capacity(net, bus, 1.0, {}, s), injection_hosting_capacity(light, bus, 1.0, {}, s));
}

TEST(Snapshot, WorstHourAndValidation) {
  SnapshotInputs in;
  in.load_multiplier = default_load_profile();
  in.irradiance = default_irradiance_profile();
  ASSERT_EQ(in.load_multiplier.size(), 24u);
  std::size_t best = 0;
  for (std::size_t h = 0; h < 24; ++h) {
    if (in.irradiance[h] - in.load_multiplier[h] > in.irradiance[best] - in.load_multiplier[best]) best = h;
  }
  EXPECT_EQ(in.worst_hour(), best);
  EXPECT_EQ(in.irradiance[12], 1.0);
  auto bad = in;
  bad.irradiance[3] = 1.2;
  EXPECT_THROW(bad.validate(), Error);
  bad = in;
  bad.load_multiplier.pop_back();
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Snapshot, FullHorizonIsMinimumOverSunnyHours) {
  SnapshotInputs in{default_load_profile(), default_irradiance_profile()};
  const auto net = two_bus(0.1, 7, 0.02);
  const HcSearch s{0.0, 20000.0, 0.5};
  const double worst = bus_hosting_capacity(net, 1, in, {}, s);
  const double full = bus_hosting_capacity(net, 1, in, {}, s, {}, true);
  EXPECT_LE(full, worst);
  double manual = s.hi_kw;
  const std::size_t bus[] = {1};
  for (std::size_t h = 0; h < 24; ++h) {
    if (in.irradiance[h] <= 0) continue;
    manual = std::min(manual, injection_hosting_capacity(scale_loads(net, in.load_multiplier[h]), bus,
                                                         in.irradiance[h], {}, s));
  }
  EXPECT_EQ(full, manual);
}

TEST(Profiles, CsvParsing) {
  std::string csv = "hour,irradiance\n";
  for (int h = 0; h < 24; ++h) csv += std::to_string(h) + "," + std::to_string(h / 24.0) + "\n";
  const auto v = parse_profile_csv(csv, "irradiance");
  ASSERT_EQ(v.size(), 24u);
  EXPECT_NEAR(v[12], 0.5, 1e-6);
  EXPECT_THROW(parse_profile_csv(csv, "load"), Error);
  EXPECT_THROW(parse_profile_csv("hour,irradiance\n1,0.5\n", "irradiance"), Error);
  EXPECT_THROW(parse_profile_csv("hour,irradiance\n0,abc\n", "irradiance"), Error);
}

TEST(Levels, ParseAndEnsembleShapes) {
  EXPECT_EQ(parse_hc_level("transformer"), HcLevel::transformer);
  EXPECT_EQ(to_string(HcLevel::system), "system");
  EXPECT_THROW(parse_hc_level("feeder"), Error);

  fixtures::LatticeSpec spec;
  spec.rows = 5;
  spec.cols = 5;
  spec.spacing_m = 40.0;
  const auto topo = fixtures::lattice_topology(spec);
  const auto e = generate_ensemble(topo, default_models(5, 50), 4, 2);
  const SnapshotInputs in{default_load_profile(), default_irradiance_profile()};
  HcOptions opt;
  opt.search = {0.0, 2000.0, 2.0};
  std::size_t loads = 0;
  for (const auto& b : topo.buses) loads += b.load_point;

  opt.level = HcLevel::bus;
  const auto bus = ensemble_hosting_capacity(e, topo, in, opt);
  EXPECT_EQ(bus.elements.size(), loads);
  opt.level = HcLevel::transformer;
  const auto tr = ensemble_hosting_capacity(e, topo, in, opt);
  EXPECT_LE(tr.elements.size(), topo.transformers.size());
  EXPECT_GE(tr.elements.size(), 1u);
  opt.level = HcLevel::system;
  const auto sys = ensemble_hosting_capacity(e, topo, in, opt);
  ASSERT_EQ(sys.elements, std::vector<std::string>{"system"});
  for (const auto& v : {bus.values, tr.values, sys.values}) {
    for (const auto& row : v) {
      ASSERT_EQ(row.size(), 4u);
      for (double x : row) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 2000.0);
      }
    }
  }
  const auto sum = sys.summarize(0.94);
  ASSERT_EQ(sum.size(), 1u);
  EXPECT_LE(sum[0].hdi_lo, sum[0].mean);
  EXPECT_GE(sum[0].hdi_hi, sum[0].mean);
  const auto csv = render_hc_csv(sys);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "element,sample_idx,hc_kw");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  const auto sc = render_hc_summary_csv(sys, 0.94);
  EXPECT_EQ(sc.substr(0, sc.find('\n')), "element,mean_kw,hdi_lo_kw,hdi_hi_kw");

  opt.jobs = 3;
  const auto par = ensemble_hosting_capacity(e, topo, in, opt);
  EXPECT_EQ(par.values, sys.values);
  EXPECT_EQ(code_of([&] { ensemble_hosting_capacity(Ensemble{}, topo, in, opt); }), Errc::EmptyEnsemble);
}
