#include "fixtures.hpp"

#include <atomic>
#include <cmath>
#include <queue>
#include <random>
#include <unistd.h>

#include "gridsynth/random.hpp"

namespace fixtures {

namespace {

constexpr double kMetersPerDegLat = 111320.0;

struct Lattice {
  std::vector<std::int64_t> ids;
  std::vector<LatLon> pos;
};

}  // namespace

osm::OsmExtract lattice_extract(const LatticeSpec& s) {
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  osm::OsmExtract ex;
  const double cos_lat = std::cos(s.origin_lat * 3.14159265358979323846 / 180.0);
  auto to_pos = [&](double north_m, double east_m) {
    return LatLon{s.origin_lat + north_m / kMetersPerDegLat, s.origin_lon + east_m / (kMetersPerDegLat * cos_lat)};
  };

  Lattice lat;
  for (int r = 0; r < s.rows; ++r) {
    for (int c = 0; c < s.cols; ++c) {
      const double n = r * s.spacing_m + s.jitter * s.spacing_m * u(rng);
      const double e = c * s.spacing_m + s.jitter * s.spacing_m * u(rng);
      const auto p = to_pos(n, e);
      const std::int64_t id = 1000 + r * s.cols + c;
      lat.ids.push_back(id);
      lat.pos.push_back(p);
      ex.nodes.push_back({id, p.lat, p.lon, {}});
    }
  }
  std::int64_t way_id = 1;
  std::bernoulli_distribution drop(s.drop_edge_p);
  auto street = [&](int a, int b) {
    if (s.drop_edge_p > 0 && drop(rng)) return;
    ex.ways.push_back({way_id++, {lat.ids[a], lat.ids[b]}, {{"highway", "residential"}}});
  };
  for (int r = 0; r < s.rows; ++r) {
    for (int c = 0; c < s.cols; ++c) {
      const int i = r * s.cols + c;
      if (c + 1 < s.cols) street(i, i + 1);
      if (r + 1 < s.rows) street(i, i + s.cols);
    }
  }

  // Substations spread along the diagonal, slightly off the street vertices.
  std::vector<LatLon> subs;
  for (int k = 0; k < s.substations; ++k) {
    const double f = (k + 0.5) / s.substations;
    const double n = f * (s.rows - 1) * s.spacing_m + 7.0;
    const double e = f * (s.cols - 1) * s.spacing_m - 5.0;
    const auto p = to_pos(n, e);
    subs.push_back(p);
    ex.nodes.push_back({500000 + k, p.lat, p.lon, {{"power", "substation"}, {"voltage", "138000;13800"}}});
  }

  if (s.transmission) {
    // One 138 kV line from a generator west of the grid through every substation.
    std::vector<std::int64_t> line_nodes;
    const auto g = to_pos(-0.5 * s.spacing_m, -3.0 * s.spacing_m);
    ex.nodes.push_back({600000, g.lat, g.lon, {{"power", "generator"}}});
    line_nodes.push_back(600000);
    for (std::size_t k = 0; k < subs.size(); ++k) {
      const std::int64_t id = 600001 + static_cast<std::int64_t>(k);
      ex.nodes.push_back({id, subs[k].lat + 1e-5, subs[k].lon + 1e-5, {}});
      line_nodes.push_back(id);
    }
    ex.ways.push_back({900000, line_nodes, {{"power", "line"}, {"voltage", "138000"}}});
  }

  std::int64_t bid = 700000;
  std::uniform_int_distribution<int> count(0, 2 * s.buildings_per_vertex);
  for (const auto& p : lat.pos) {
    const int nb = s.buildings_per_vertex > 0 ? count(rng) : 0;
    for (int b = 0; b < nb; ++b) {
      ex.nodes.push_back({bid++, p.lat + 2e-4 * u(rng), p.lon + 2e-4 * u(rng), {{"building", "yes"}}});
    }
  }
  return ex;
}

std::string lattice_document(const LatticeSpec& spec) { return osm::serialize_overpass_document(lattice_extract(spec)); }

GridTopology lattice_topology(const LatticeSpec& spec, TopologyOptions options) {
  const auto ex = lattice_extract(spec);
  return build_topology(osm::extract_street_graph(ex), osm::extract_power_features(ex), options);
}

namespace {

void finish_single_zone(GridTopology& t) {
  t.zones.zones = 1;
  t.zones.node_zone.assign(t.buses.size(), 1);
  t.zones.line_zone.assign(t.branches.size(), 1);
  t.zones.node_distance_km.assign(t.buses.size(), 0.0);
  for (const auto& br : t.branches) t.zones.node_distance_km[br.to] = t.zones.node_distance_km[br.from] + br.length_km;
}

Bus make_bus(std::string id, BusKind kind, double kv, bool load, double lat, double lon) {
  Bus b;
  b.id = std::move(id);
  b.kind = kind;
  b.voltage_kv = kv;
  b.load_point = load;
  b.pos = {lat, lon};
  b.street_vertex = 0;
  return b;
}

}  // namespace

GridTopology star_topology(std::size_t n, double lv_kv, double length_km) {
  GridTopology t;
  t.name = "star";
  t.buses.push_back(make_bus("s1", BusKind::substation, lv_kv, false, 0.0, 0.0));
  t.feeders.push_back({1, 0});
  for (std::size_t i = 0; i < n; ++i) {
    t.buses.push_back(make_bus("lv" + std::to_string(i), BusKind::lv, lv_kv, true, 1e-4 * static_cast<double>(i % 100),
                               1e-4 * static_cast<double>(i / 100)));
    t.branches.push_back({"l" + std::to_string(i), 0, i + 1, length_km});
  }
  finish_single_zone(t);
  return t;
}

GridTopology chain_topology(std::size_t n, double kv, double length_km) {
  GridTopology t;
  t.name = "chain";
  t.buses.push_back(make_bus("s1", BusKind::substation, kv, false, 0.0, 0.0));
  t.feeders.push_back({1, 0});
  for (std::size_t i = 0; i < n; ++i) {
    t.buses.push_back(make_bus("lv" + std::to_string(i), BusKind::lv, kv, true, 1e-3 * static_cast<double>(i + 1), 0.0));
    t.branches.push_back({"l" + std::to_string(i), i, i + 1, length_km});
  }
  finish_single_zone(t);
  return t;
}

std::vector<Phasor3> fixed_point_voltages(const ThreePhaseNetwork& net, double tol, int max_iter) {
  const auto n = net.size();
  // Parent branch of every bus, found by its own breadth-first search.
  std::vector<std::ptrdiff_t> up(n, -1);
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> q;
  for (auto s : net.sources) {
    seen[s] = true;
    q.push(s);
  }
  while (!q.empty()) {
    const auto b = q.front();
    q.pop();
    for (std::size_t e = 0; e < net.branches.size(); ++e) {
      const auto& br = net.branches[e];
      const auto other = br.from == b ? br.to : (br.to == b ? br.from : n);
      if (other == n || seen[other]) continue;
      seen[other] = true;
      up[other] = static_cast<std::ptrdiff_t>(e);
      q.push(other);
    }
  }
  auto parent_of = [&](std::size_t b) {
    const auto& br = net.branches[static_cast<std::size_t>(up[b])];
    return br.from == b ? br.to : br.from;
  };
  // path[b]: branches from the source down to b; below[e]: buses under branch e.
  std::vector<std::vector<std::size_t>> path(n);
  std::vector<std::vector<std::size_t>> below(net.branches.size());
  std::vector<std::size_t> root_of(n);
  for (std::size_t b = 0; b < n; ++b) {
    std::size_t cur = b;
    while (up[cur] >= 0) {
      const auto e = static_cast<std::size_t>(up[cur]);
      path[b].push_back(e);
      below[e].push_back(b);
      cur = parent_of(cur);
    }
    root_of[b] = cur;
  }

  std::vector<Phasor3> v(n);
  for (std::size_t b = 0; b < n; ++b) {
    for (int c = 0; c < 3; ++c) v[b][c] = ((net.mask[b] >> c) & 1u) ? source_voltage(c) : cplx{};
  }
  for (int it = 0; it < max_iter; ++it) {
    std::vector<Phasor3> next(n);
    double diff = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      for (int c = 0; c < 3; ++c) {
        if (!((net.mask[b] >> c) & 1u)) continue;
        cplx val = source_voltage(c);
        for (auto e : path[b]) {
          cplx through{};
          for (auto d : below[e]) {
            if ((net.mask[d] >> c) & 1u) through += std::conj(net.injection[d][c] / v[d][c]);
          }
          val += net.branches[e].z[c] * through;  // injections flow up, so the drop has this sign
        }
        next[b][c] = val;
        diff = std::max(diff, std::abs(val - v[b][c]));
      }
    }
    v = std::move(next);
    if (diff < tol) break;
  }
  return v;
}

std::vector<BusRecord> simulate_power_records(const PowerTruth& t, std::size_t per_zone, std::uint64_t seed) {
  auto rng = make_stream(seed, 1, 0x7465);
  std::vector<BusRecord> out;
  for (int z = 1; z <= t.zones; ++z) {
    for (std::size_t i = 0; i < per_zone; ++i) {
      BusRecord r;
      r.bus_id = "b" + std::to_string(z) + "_" + std::to_string(i);
      r.hop_zone = z;
      r.phase = kAllPhases[categorical(rng, t.c[static_cast<std::size_t>(z - 1)])];
      const int k = conductor_count(r.phase);
      const double mean = t.p_pot[static_cast<std::size_t>(z - 1)][static_cast<std::size_t>(k - 1)] / k;
      for (int c = 0; c < 3; ++c) {
        if (has_conductor(r.phase, c)) r.p_kw[c] = truncated_normal_nonneg(rng, mean, t.sigma);
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<BusRecord> simulate_reliability_records(const ReliabilityTruth& t, std::size_t per_zone,
                                                    std::uint64_t seed) {
  auto rng = make_stream(seed, 2, 0x7465);
  std::vector<BusRecord> out;
  for (int z = 1; z <= t.zones; ++z) {
    const auto zi = static_cast<std::size_t>(z - 1);
    for (std::size_t i = 0; i < per_zone; ++i) {
      BusRecord r;
      r.bus_id = "b" + std::to_string(z) + "_" + std::to_string(i);
      r.hop_zone = z;
      r.phase = Phase::A;
      r.p_kw = {1.0, 0.0, 0.0};
      r.interruptions_per_year = negative_binomial(rng, t.mu[zi], t.alpha);
      if (uniform01(rng) < t.p[zi]) {
        const int m = 1 + static_cast<int>(uniform01(rng) * 3.0);
        for (int j = 0; j < m; ++j) r.interruption_durations_h.push_back(weibull(rng, t.weibull[zi].shape, t.weibull[zi].scale));
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<LineRecord> simulate_line_records(const ImpedanceTruth& t, std::size_t per_zone, std::uint64_t seed) {
  auto rng = make_stream(seed, 3, 0x7465);
  std::vector<LineRecord> out;
  for (int z = 1; z <= t.zones; ++z) {
    const auto zi = static_cast<std::size_t>(z - 1);
    for (std::size_t i = 0; i < per_zone; ++i) {
      LineRecord r;
      r.line_id = "l" + std::to_string(z) + "_" + std::to_string(i);
      r.from_bus = "a";
      r.to_bus = "b";
      r.hop_zone = z;
      r.length_km = 0.05 + 0.5 * uniform01(rng);
      const auto kr = categorical(rng, t.w_r[zi]);
      const auto kx = categorical(rng, t.w_rho[zi]);
      const double r_km = gamma_shape_rate(rng, t.gamma_r[kr].shape, t.gamma_r[kr].rate);
      const double rho = gamma_shape_rate(rng, t.gamma_rho[kx].shape, t.gamma_rho[kx].rate);
      r.r1_ohm = r_km * r.length_km;
      r.x1_ohm = r.r1_ohm * rho;
      out.push_back(std::move(r));
    }
  }
  return out;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("gridsynth_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace fixtures
