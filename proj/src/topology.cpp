#include "gridsynth/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <map>
#include <numeric>
#include <queue>
#include <unordered_map>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "gridsynth/error.hpp"
#include "gridsynth/models.hpp"

namespace gridsynth {

std::string_view to_string(DistanceMethod m) noexcept {
  switch (m) {
    case DistanceMethod::topological: return "topological";
    case DistanceMethod::electrical: return "electrical";
    case DistanceMethod::euclidean: return "euclidean";
  }
  return "topological";
}

DistanceMethod parse_distance_method(std::string_view text) {
  if (text == "topological") return DistanceMethod::topological;
  if (text == "electrical") return DistanceMethod::electrical;
  if (text == "euclidean") return DistanceMethod::euclidean;
  fail(Errc::InvalidArgument, "unknown distance method '" + std::string(text) + "'");
}

// --- radial structure -------------------------------------------------------

TreeIndex index_tree(const GridTopology& topo) {
  const std::size_t n = topo.buses.size();
  TreeIndex t;
  t.parent.assign(n, -1);
  t.parent_edge.assign(n, {});
  t.children.assign(n, {});

  auto attach = [&](std::size_t from, std::size_t to, EdgeRef ref) {
    if (from >= n || to >= n) fail(Errc::NonRadialTopology, "edge references an unknown bus");
    if (t.parent[to] != -1) fail(Errc::NonRadialTopology, "bus " + topo.buses[to].id + " has two upstream edges");
    t.parent[to] = static_cast<std::ptrdiff_t>(from);
    t.parent_edge[to] = ref;
    t.children[from].push_back(to);
  };
  for (std::size_t i = 0; i < topo.branches.size(); ++i) {
    attach(topo.branches[i].from, topo.branches[i].to, {EdgeKind::line, i});
  }
  for (std::size_t i = 0; i < topo.transformers.size(); ++i) {
    attach(topo.transformers[i].hv_bus, topo.transformers[i].lv_bus, {EdgeKind::transformer, i});
  }

  std::vector<bool> seen(n, false);
  t.order.reserve(n);
  for (std::size_t f = 0; f < topo.feeders.size(); ++f) {
    const auto root = topo.feeders[f].source_bus;
    if (root >= n || t.parent[root] != -1) fail(Errc::NonRadialTopology, "feeder source has an upstream edge");
    std::deque<std::size_t> queue{root};
    seen[root] = true;
    while (!queue.empty()) {
      const auto b = queue.front();
      queue.pop_front();
      if (topo.buses[b].feeder != f) fail(Errc::NonRadialTopology, "bus " + topo.buses[b].id + " crosses feeders");
      t.order.push_back(b);
      for (auto c : t.children[b]) {
        if (seen[c]) fail(Errc::NonRadialTopology, "cycle through bus " + topo.buses[c].id);
        seen[c] = true;
        queue.push_back(c);
      }
    }
  }
  if (t.order.size() != n) fail(Errc::NonRadialTopology, "buses unreachable from any feeder source");
  return t;
}

std::vector<RadialityReport> check_radiality(const GridTopology& topo) {
  const std::size_t nf = topo.feeders.size();
  std::vector<RadialityReport> reports(nf);
  std::vector<std::size_t> uf(topo.buses.size());
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](std::size_t x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  for (std::size_t b = 0; b < topo.buses.size(); ++b) {
    if (topo.buses[b].feeder < nf) ++reports[topo.buses[b].feeder].buses;
  }
  auto count_edge = [&](std::size_t a, std::size_t b) {
    const auto f = topo.buses[a].feeder;
    if (f < nf && topo.buses[b].feeder == f) ++reports[f].edges;
    uf[find(a)] = find(b);
  };
  for (const auto& br : topo.branches) count_edge(br.from, br.to);
  for (const auto& tr : topo.transformers) count_edge(tr.hv_bus, tr.lv_bus);
  for (std::size_t f = 0; f < nf; ++f) {
    reports[f].feeder = f;
    const auto root = find(topo.feeders[f].source_bus);
    reports[f].connected = true;
    for (std::size_t b = 0; b < topo.buses.size(); ++b) {
      if (topo.buses[b].feeder == f && find(b) != root) {
        reports[f].connected = false;
        break;
      }
    }
  }
  return reports;
}

// --- service areas and feeder trees -----------------------------------------

ServiceAssignment assign_service_areas(const osm::StreetGraph& street, std::span<const osm::PointFeature> substations) {
  if (substations.empty()) fail(Errc::NoSubstations, "no substations in the region; inject one manually");
  if (street.vertices.empty()) fail(Errc::NoStreets, "street graph is empty");

  std::vector<const osm::PointFeature*> subs;
  for (const auto& s : substations) subs.push_back(&s);
  std::stable_sort(subs.begin(), subs.end(), [](auto* a, auto* b) { return a->id < b->id; });

  ServiceAssignment out;
  std::vector<std::ptrdiff_t> claimed(street.vertices.size(), -1);
  std::vector<const osm::PointFeature*> kept;
  for (const auto* s : subs) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < street.vertices.size(); ++v) {
      const double d = haversine_km(s->pos, street.vertices[v].pos);
      if (d < best_d) {
        best_d = d;
        best = v;
      }
    }
    if (claimed[best] != -1) {
      ++out.merged_substations;
      continue;
    }
    claimed[best] = static_cast<std::ptrdiff_t>(kept.size());
    kept.push_back(s);
    out.substation_ids.push_back(s->id);
    out.substation_vertex.push_back(best);
  }

  out.vertex_owner.assign(street.vertices.size(), 0);
  for (std::size_t v = 0; v < street.vertices.size(); ++v) {
    if (claimed[v] != -1) {
      out.vertex_owner[v] = static_cast<std::size_t>(claimed[v]);
      continue;
    }
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < kept.size(); ++s) {
      const double d = haversine_km(kept[s]->pos, street.vertices[v].pos);
      if (d < best_d) {  // strict: equal distances keep the lower id
        best_d = d;
        best = s;
      }
    }
    out.vertex_owner[v] = best;
  }
  return out;
}

namespace {

/// Multi-source Dijkstra over vertices flagged `allowed`. Equal-distance
/// relaxations prefer the lower-index parent so trees are deterministic.
struct ShortestPathForest {
  std::vector<double> dist;
  std::vector<std::ptrdiff_t> parent;      // street vertex, -1 for sources/unreached
  std::vector<double> edge_km;
  std::vector<std::size_t> label;          // source label propagated down the tree
  std::vector<std::size_t> settle_order;
};

ShortestPathForest shortest_path_forest(const osm::StreetGraph& street,
                                        const std::vector<std::vector<osm::StreetGraph::Arc>>& adj,
                                        const std::vector<std::pair<std::size_t, std::size_t>>& sources,
                                        const std::vector<double>& source_dist, const std::vector<bool>& allowed) {
  const auto n = street.vertices.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  ShortestPathForest f;
  f.dist.assign(n, inf);
  f.parent.assign(n, -1);
  f.edge_km.assign(n, 0.0);
  f.label.assign(n, SIZE_MAX);
  std::vector<bool> done(n, false);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto [v, label] = sources[i];
    f.dist[v] = source_dist[i];
    f.label[v] = label;
    heap.push({f.dist[v], v});
  }
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (done[u] || d > f.dist[u]) continue;
    done[u] = true;
    f.settle_order.push_back(u);
    for (const auto& arc : adj[u]) {
      const auto v = arc.to;
      if (!allowed[v] || done[v]) continue;
      const double nd = d + street.edges[arc.edge].length_km;
      const bool better = nd < f.dist[v] ||
                          (nd == f.dist[v] && f.parent[v] != -1 && static_cast<std::ptrdiff_t>(u) < f.parent[v]);
      if (better) {
        f.dist[v] = nd;
        f.parent[v] = static_cast<std::ptrdiff_t>(u);
        f.edge_km[v] = street.edges[arc.edge].length_km;
        f.label[v] = f.label[u];
        heap.push({nd, v});
      }
    }
  }
  return f;
}

}  // namespace

FeederTree build_radial_feeder(const osm::StreetGraph& street, std::size_t root, const std::vector<bool>& assigned) {
  if (root >= street.vertices.size() || !assigned[root]) {
    fail(Errc::EmptyFeeder, "substation vertex is not part of its service area");
  }
  const auto adj = street.adjacency();
  const auto forest = shortest_path_forest(street, adj, {{root, 0}}, {0.0}, assigned);

  FeederTree tree;
  tree.root = root;
  std::unordered_map<std::size_t, std::ptrdiff_t> pos;
  for (auto v : forest.settle_order) {
    pos[v] = static_cast<std::ptrdiff_t>(tree.vertices.size());
    tree.vertices.push_back(v);
    tree.parent.push_back(forest.parent[v] == -1 ? -1 : pos.at(static_cast<std::size_t>(forest.parent[v])));
    tree.edge_km.push_back(forest.edge_km[v]);
    tree.distance_km.push_back(forest.dist[v]);
  }
  const auto assigned_count = static_cast<std::size_t>(std::count(assigned.begin(), assigned.end(), true));
  tree.dropped = assigned_count - tree.vertices.size();
  return tree;
}

std::vector<std::vector<std::size_t>> cluster_tree(const std::vector<std::ptrdiff_t>& parent, std::size_t max_cluster) {
  if (max_cluster < 1) fail(Errc::InvalidArgument, "max_cluster must be at least 1");
  const std::size_t n = parent.size();
  if (n == 0) return {};
  std::size_t root = n;
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (parent[v] < 0) {
      root = v;
    } else {
      children[static_cast<std::size_t>(parent[v])].push_back(v);
    }
  }
  if (root == n) fail(Errc::InvalidArgument, "tree has no root");
  if (n == 1) return {{root}};

  // Pre-order, then process in reverse for a post-order pass.
  std::vector<std::size_t> preorder;
  preorder.reserve(n);
  std::vector<std::size_t> stack{root};
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    preorder.push_back(v);
    for (auto it = children[v].rbegin(); it != children[v].rend(); ++it) stack.push_back(*it);
  }

  std::vector<std::size_t> pending(n, 0);
  std::vector<bool> closed(n, false);
  for (auto it = preorder.rbegin(); it != preorder.rend(); ++it) {
    const auto v = *it;
    if (v == root) continue;
    std::vector<std::size_t> open;
    for (auto c : children[v]) {
      if (!closed[c]) open.push_back(c);
    }
    std::stable_sort(open.begin(), open.end(), [&](auto a, auto b) { return pending[a] < pending[b]; });
    std::size_t size = 1;
    for (auto c : open) {
      if (size + pending[c] <= max_cluster) {
        size += pending[c];
      } else {
        closed[c] = true;
      }
    }
    pending[v] = size;
    if (size >= max_cluster) closed[v] = true;
  }

  // Open subtrees hanging off the root share one cluster while they fit; the
  // earliest such child heads it.
  std::vector<std::size_t> head_override(n, n);
  {
    std::vector<std::size_t> open;
    for (auto c : children[root]) {
      if (!closed[c]) open.push_back(c);
    }
    std::vector<std::size_t> by_size = open;
    std::stable_sort(by_size.begin(), by_size.end(), [&](auto a, auto b) { return pending[a] < pending[b]; });
    std::vector<bool> merged(n, false);
    std::size_t size = 0;
    for (auto c : by_size) {
      if (size + pending[c] <= max_cluster) {
        size += pending[c];
        merged[c] = true;
      }
    }
    std::size_t rep = n;
    for (auto c : open) {
      closed[c] = true;
      if (!merged[c]) continue;
      if (rep == n) rep = c;
      head_override[c] = rep;
    }
  }

  std::vector<std::size_t> head(n, n);
  std::map<std::size_t, std::size_t> cluster_of_head;
  std::vector<std::vector<std::size_t>> clusters;
  for (auto v : preorder) {
    if (v == root) continue;
    if (closed[v]) {
      head[v] = head_override[v] != n ? head_override[v] : v;
    } else {
      head[v] = head[static_cast<std::size_t>(parent[v])];
    }
    auto [it, inserted] = cluster_of_head.try_emplace(head[v], clusters.size());
    if (inserted) clusters.emplace_back();
    clusters[it->second].push_back(v);
  }
  return clusters;
}

std::vector<double> compute_distance_metric(const GridTopology& topo, const TreeIndex& tree, DistanceMethod method,
                                            std::span<const double> line_impedance_ohm) {
  if (method == DistanceMethod::electrical && line_impedance_ohm.size() != topo.branches.size()) {
    fail(Errc::MissingImpedances, "electrical distance needs one |Z| per branch");
  }
  std::vector<double> d(topo.buses.size(), 0.0);
  for (auto b : tree.order) {
    if (tree.parent[b] < 0) continue;
    const auto p = static_cast<std::size_t>(tree.parent[b]);
    const auto& e = tree.parent_edge[b];
    switch (method) {
      case DistanceMethod::topological:
        d[b] = d[p] + (e.kind == EdgeKind::line ? topo.branches[e.index].length_km : 0.0);
        break;
      case DistanceMethod::electrical:
        d[b] = d[p] + (e.kind == EdgeKind::line ? line_impedance_ohm[e.index] : 0.0);
        break;
      case DistanceMethod::euclidean: {
        const auto& src = topo.buses[topo.feeders[topo.buses[b].feeder].source_bus];
        d[b] = haversine_km(src.pos, topo.buses[b].pos);
        break;
      }
    }
  }
  return d;
}

int zone_of(double distance, double d_max, int zones) noexcept {
  if (!(d_max > 0.0)) return 1;
  const int z = 1 + static_cast<int>(std::floor(static_cast<double>(zones) * distance / d_max));
  return std::clamp(z, 1, zones);
}

HopZoneAssignment compute_hop_zones(const GridTopology& topo, const TreeIndex& tree, std::span<const double> distance_km,
                                    int zones) {
  if (zones < 1) fail(Errc::InvalidArgument, "zone count must be at least 1");
  HopZoneAssignment hz;
  hz.zones = zones;
  hz.node_distance_km.assign(distance_km.begin(), distance_km.end());
  std::vector<double> d_max(topo.feeders.size(), 0.0);
  for (std::size_t b = 0; b < topo.buses.size(); ++b) {
    auto& m = d_max[topo.buses[b].feeder];
    m = std::max(m, distance_km[b]);
  }
  hz.node_zone.resize(topo.buses.size());
  for (std::size_t b = 0; b < topo.buses.size(); ++b) {
    hz.node_zone[b] = tree.parent[b] < 0 ? 1 : zone_of(distance_km[b], d_max[topo.buses[b].feeder], zones);
  }
  hz.line_zone.resize(topo.branches.size());
  for (std::size_t l = 0; l < topo.branches.size(); ++l) hz.line_zone[l] = hz.node_zone[topo.branches[l].from];
  return hz;
}

double pick_transformer_rating(double expected_peak_kw) noexcept {
  for (double r : kTransformerLadderKva) {
    if (r >= 1.2 * expected_peak_kw) return r;
  }
  return kTransformerLadderKva.back();
}

// --- transmission overlay ---------------------------------------------------

TransmissionLayer overlay_transmission(const osm::PowerFeatures& features, const GridTopology& topo,
                                       const HvDefaults& hv) {
  TransmissionLayer layer;
  std::vector<std::size_t> substation_buses;
  for (const auto& f : topo.feeders) substation_buses.push_back(f.source_bus);

  if (features.transmission_ways.empty()) {
    LatLon c{0.0, 0.0};
    for (auto b : substation_buses) {
      c.lat += topo.buses[b].pos.lat;
      c.lon += topo.buses[b].pos.lon;
    }
    if (!substation_buses.empty()) {
      c.lat /= static_cast<double>(substation_buses.size());
      c.lon /= static_cast<double>(substation_buses.size());
    }
    layer.hv_buses.push_back({"sourcebus", c, hv.kv, false});
    layer.external_source = 0;
  } else {
    std::map<std::int64_t, std::size_t> bus_at_node;
    auto hv_bus_for = [&](std::int64_t node, LatLon pos) {
      auto [it, inserted] = bus_at_node.try_emplace(node, layer.hv_buses.size());
      if (inserted) layer.hv_buses.push_back({"hv" + std::to_string(node), pos, hv.kv, false});
      return it->second;
    };
    for (const auto& way : features.transmission_ways) {
      const auto a = hv_bus_for(way.node_ids.front(), way.polyline.front());
      const auto b = hv_bus_for(way.node_ids.back(), way.polyline.back());
      double len = 0.0;
      for (std::size_t i = 0; i + 1 < way.polyline.size(); ++i) len += haversine_km(way.polyline[i], way.polyline[i + 1]);
      if (a == b) continue;  // closed ring without a second terminal
      layer.hv_lines.push_back({"hl" + std::to_string(layer.hv_lines.size()), a, b, std::max(len, 1e-3),
                                hv.r_ohm_per_km, hv.x_ohm_per_km});
    }
    for (const auto& g : features.generators) {
      layer.hv_buses.push_back({"hvg" + std::to_string(g.id), g.pos, hv.kv, true});
    }

    // Join disconnected pieces through their closest bus pairs.
    const auto nb = layer.hv_buses.size();
    std::vector<std::size_t> uf(nb);
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&](std::size_t x) {
      while (uf[x] != x) x = uf[x] = uf[uf[x]];
      return x;
    };
    for (const auto& l : layer.hv_lines) uf[find(l.from)] = find(l.to);
    for (;;) {
      const auto main = find(0);
      double best = std::numeric_limits<double>::infinity();
      std::size_t ba = 0;
      std::size_t bb = 0;
      for (std::size_t i = 0; i < nb; ++i) {
        if (find(i) != main) continue;
        for (std::size_t j = 0; j < nb; ++j) {
          if (find(j) == main) continue;
          const double d = haversine_km(layer.hv_buses[i].pos, layer.hv_buses[j].pos);
          if (d < best) {
            best = d;
            ba = i;
            bb = j;
          }
        }
      }
      if (!std::isfinite(best)) break;
      layer.hv_lines.push_back({"hl" + std::to_string(layer.hv_lines.size()), ba, bb, std::max(best, 1e-3),
                                hv.r_ohm_per_km, hv.x_ohm_per_km});
      uf[find(bb)] = find(ba);
    }

    std::size_t source = 0;
    for (std::size_t i = 0; i < nb; ++i) {
      if (layer.hv_buses[i].generation) {
        source = i;
        break;
      }
    }
    layer.external_source = source;
    layer.hv_buses[source].id = "sourcebus";
  }

  for (auto b : substation_buses) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < layer.hv_buses.size(); ++h) {
      const double d = haversine_km(layer.hv_buses[h].pos, topo.buses[b].pos);
      if (d < best_d) {
        best_d = d;
        best = h;
      }
    }
    layer.grid_transformers.push_back({"gt" + std::to_string(layer.grid_transformers.size()), best, b,
                                       hv.grid_transformer_mva, hv.grid_transformer_vk_percent});
  }
  return layer;
}

// --- full build -------------------------------------------------------------

namespace {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;
using PlanarPoint = bg::model::point<double, 2, bg::cs::cartesian>;
using IndexedPoint = std::pair<PlanarPoint, std::size_t>;

void apply_building_scales(GridTopology& topo, std::span<const LatLon> buildings) {
  std::vector<std::size_t> load_buses;
  for (std::size_t b = 0; b < topo.buses.size(); ++b) {
    if (topo.buses[b].load_point) load_buses.push_back(b);
  }
  if (buildings.empty() || load_buses.empty()) return;

  double lat_ref = 0.0;
  for (auto b : load_buses) lat_ref += topo.buses[b].pos.lat;
  lat_ref /= static_cast<double>(load_buses.size());
  const double kx = std::cos(lat_ref * std::numbers::pi / 180.0);
  auto planar = [&](const LatLon& p) { return PlanarPoint(p.lon * kx, p.lat); };

  std::vector<IndexedPoint> pts;
  pts.reserve(load_buses.size());
  for (auto b : load_buses) pts.emplace_back(planar(topo.buses[b].pos), b);
  bgi::rtree<IndexedPoint, bgi::quadratic<16>> tree(pts.begin(), pts.end());

  std::vector<double> count(topo.buses.size(), 0.0);
  std::vector<IndexedPoint> hits;
  for (const auto& building : buildings) {
    hits.clear();
    tree.query(bgi::nearest(planar(building), 4), std::back_inserter(hits));
    std::size_t best = hits.front().second;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& h : hits) {
      const double d = haversine_km(building, topo.buses[h.second].pos);
      if (d < best_d || (d == best_d && h.second < best)) {
        best_d = d;
        best = h.second;
      }
    }
    count[best] += 1.0;
  }
  // (count + 1) / (feeder mean + 1): mean 1 per feeder, never zero.
  std::vector<double> total(topo.feeders.size(), 0.0);
  std::vector<double> members(topo.feeders.size(), 0.0);
  for (auto b : load_buses) {
    total[topo.buses[b].feeder] += count[b];
    members[topo.buses[b].feeder] += 1.0;
  }
  for (auto b : load_buses) {
    const auto f = topo.buses[b].feeder;
    topo.buses[b].building_scale = (count[b] + 1.0) / (total[f] / members[f] + 1.0);
  }
}

}  // namespace

void rezone_topology(GridTopology& topo, DistanceMethod method, int zones, std::span<const double> line_impedance_ohm,
                     std::span<const double> expected_bus_kw) {
  const auto tree = index_tree(topo);
  const auto dist = compute_distance_metric(topo, tree, method, line_impedance_ohm);
  topo.zones = compute_hop_zones(topo, tree, dist, zones);
  topo.distance_method = method;

  std::vector<double> expected(expected_bus_kw.begin(), expected_bus_kw.end());
  if (expected.empty()) expected = expected_bus_demand_kw(default_power_posterior(zones, 64));
  for (auto& tr : topo.transformers) {
    double peak = 0.0;
    for (auto b : tree.children[tr.lv_bus]) {
      if (!topo.buses[b].load_point) continue;
      const auto z = static_cast<std::size_t>(topo.zones.node_zone[b] - 1);
      peak += expected[std::min(z, expected.size() - 1)] * topo.buses[b].building_scale;
    }
    tr.rating_kva = pick_transformer_rating(peak);
  }
}

GridTopology build_topology(const osm::StreetGraph& street, const osm::PowerFeatures& features,
                            const TopologyOptions& options, TopologyReport* report) {
  if (options.distance_method == DistanceMethod::electrical) {
    fail(Errc::MissingImpedances, "electrical zoning needs branch impedances; rezone after the build");
  }
  if (options.max_cluster < 1) fail(Errc::InvalidArgument, "max_cluster must be at least 1");
  if (!(options.lv_kv > 0.0 && options.mv_kv > options.lv_kv && options.hv.kv > options.mv_kv)) {
    fail(Errc::InvalidArgument, "voltage levels must satisfy hv > mv > lv > 0");
  }

  std::vector<osm::PointFeature> substations = features.substations;
  for (std::size_t i = 0; i < options.injected_substations.size(); ++i) {
    substations.push_back({-static_cast<std::int64_t>(i) - 1, options.injected_substations[i], {{"power", "substation"}}});
  }
  const auto service = assign_service_areas(street, substations);
  const auto adj = street.adjacency();
  const auto nv = street.vertices.size();
  const auto ns = service.substation_ids.size();

  // Restricted shortest-path trees, then hand unreachable vertices to whichever
  // tree reaches them first through the rest of the street graph.
  std::vector<std::pair<std::size_t, std::size_t>> sources;
  std::vector<double> source_dist;
  std::vector<bool> reached(nv, false);
  std::vector<std::size_t> owner(nv, SIZE_MAX);
  std::vector<std::ptrdiff_t> parent(nv, -1);
  std::vector<double> edge_km(nv, 0.0);
  std::vector<double> dist(nv, 0.0);
  for (std::size_t s = 0; s < ns; ++s) {
    std::vector<bool> assigned(nv, false);
    for (std::size_t v = 0; v < nv; ++v) assigned[v] = service.vertex_owner[v] == s;
    const auto tree = build_radial_feeder(street, service.substation_vertex[s], assigned);
    for (std::size_t i = 0; i < tree.vertices.size(); ++i) {
      const auto v = tree.vertices[i];
      reached[v] = true;
      owner[v] = s;
      parent[v] = tree.parent[i] < 0 ? -1 : static_cast<std::ptrdiff_t>(tree.vertices[static_cast<std::size_t>(tree.parent[i])]);
      edge_km[v] = tree.edge_km[i];
      dist[v] = tree.distance_km[i];
      sources.emplace_back(v, s);
      source_dist.push_back(tree.distance_km[i]);
    }
  }
  std::size_t reassigned = 0;
  if (std::find(reached.begin(), reached.end(), false) != reached.end()) {
    // Placed vertices only seed the search; relaxing them would move them
    // between feeders under their existing children.
    std::vector<bool> allowed(nv);
    for (std::size_t v = 0; v < nv; ++v) allowed[v] = !reached[v];
    const auto forest = shortest_path_forest(street, adj, sources, source_dist, allowed);
    for (std::size_t v = 0; v < nv; ++v) {
      if (reached[v] || forest.label[v] == SIZE_MAX) continue;
      ++reassigned;
    }
    // Walk in settle order so parents are placed before children.
    for (auto v : forest.settle_order) {
      if (reached[v]) continue;
      reached[v] = true;
      owner[v] = forest.label[v];
      parent[v] = forest.parent[v];
      edge_km[v] = forest.edge_km[v];
      dist[v] = forest.dist[v];
    }
  }
  std::size_t dropped = static_cast<std::size_t>(std::count(reached.begin(), reached.end(), false));

  GridTopology topo;
  topo.name = options.name;
  topo.feeders.resize(ns);
  std::vector<std::vector<std::size_t>> feeder_vertices(ns);
  {
    // Order each feeder's vertices by (distance, index) so parents come first.
    std::vector<std::size_t> order;
    for (std::size_t v = 0; v < nv; ++v) {
      if (reached[v]) order.push_back(v);
    }
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      if (parent[a] == -1 && parent[b] != -1) return true;
      if (parent[b] == -1 && parent[a] != -1) return false;
      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    });
    for (auto v : order) feeder_vertices[owner[v]].push_back(v);
  }

  std::vector<std::size_t> bus_of_vertex(nv, SIZE_MAX);
  std::size_t line_counter = 0;
  std::size_t trafo_counter = 0;
  for (std::size_t f = 0; f < ns; ++f) {
    auto& verts = feeder_vertices[f];
    // Dist-sorted order can place a zero-length child before its parent only
    // when lengths tie at zero, which extract_street_graph rules out.
    std::vector<std::ptrdiff_t> local_parent(verts.size(), -1);
    std::unordered_map<std::size_t, std::size_t> local;
    for (std::size_t i = 0; i < verts.size(); ++i) local[verts[i]] = i;
    for (std::size_t i = 0; i < verts.size(); ++i) {
      const auto v = verts[i];
      if (parent[v] >= 0) local_parent[i] = static_cast<std::ptrdiff_t>(local.at(static_cast<std::size_t>(parent[v])));
    }

    const auto root_vertex = service.substation_vertex[f];
    topo.feeders[f].substation_id = service.substation_ids[f];
    for (std::size_t i = 0; i < verts.size(); ++i) {
      const auto v = verts[i];
      Bus bus;
      const auto& sv = street.vertices[v];
      bus.pos = sv.pos;
      bus.street_vertex = sv.id;
      bus.voltage_kv = options.mv_kv;
      bus.feeder = f;
      if (v == root_vertex) {
        bus.kind = BusKind::substation;
        const auto sid = service.substation_ids[f];
        bus.id = sid < 0 ? "sinj" + std::to_string(-sid) : "s" + std::to_string(sid);
        topo.feeders[f].source_bus = topo.buses.size();
      } else {
        bus.id = "mv" + std::to_string(sv.id);
      }
      bus_of_vertex[v] = topo.buses.size();
      topo.buses.push_back(std::move(bus));
    }
    for (std::size_t i = 0; i < verts.size(); ++i) {
      const auto v = verts[i];
      if (parent[v] < 0) continue;
      topo.branches.push_back({"l" + std::to_string(line_counter++), bus_of_vertex[static_cast<std::size_t>(parent[v])],
                               bus_of_vertex[v], edge_km[v]});
    }

    for (const auto& cluster : cluster_tree(local_parent, options.max_cluster)) {
      const auto head_bus = bus_of_vertex[verts[cluster.front()]];
      const auto tid = trafo_counter++;
      Bus lv;
      lv.id = "lvt" + std::to_string(tid);
      lv.pos = topo.buses[head_bus].pos;
      lv.street_vertex = topo.buses[head_bus].street_vertex;
      lv.voltage_kv = options.lv_kv;
      lv.kind = BusKind::lv;
      lv.feeder = f;
      const auto lv_bus = topo.buses.size();
      topo.buses.push_back(lv);
      topo.transformers.push_back({"t" + std::to_string(tid), head_bus, lv_bus, kTransformerLadderKva.front(), 4.0, 1.2});
      for (auto member : cluster) {
        const auto mv_bus = bus_of_vertex[verts[member]];
        Bus load;
        load.id = "lv" + std::to_string(topo.buses[mv_bus].street_vertex);
        load.pos = topo.buses[mv_bus].pos;
        load.street_vertex = topo.buses[mv_bus].street_vertex;
        load.voltage_kv = options.lv_kv;
        load.kind = BusKind::lv;
        load.feeder = f;
        load.load_point = true;
        const auto load_bus = topo.buses.size();
        topo.buses.push_back(load);
        // 5 m service drop for the load at the transformer site.
        const double len = std::max(haversine_km(lv.pos, load.pos), 0.005);
        topo.branches.push_back({"l" + std::to_string(line_counter++), lv_bus, load_bus, len});
      }
    }
  }

  apply_building_scales(topo, features.buildings);
  rezone_topology(topo, options.distance_method, options.zones, {}, options.expected_bus_kw);
  topo.transmission = overlay_transmission(features, topo, options.hv);

  if (report) {
    report->dropped_street_vertices = dropped;
    report->reassigned_vertices = reassigned;
    report->merged_substations = service.merged_substations;
  }
  return topo;
}

}  // namespace gridsynth
