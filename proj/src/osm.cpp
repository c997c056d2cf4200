#include "gridsynth/osm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "gridsynth/error.hpp"

namespace gridsynth::osm {

using nlohmann::json;

RegionQuery RegionQuery::city(std::string name) {
  RegionQuery q;
  q.kind = QueryKind::city;
  q.city_name = std::move(name);
  return q;
}

RegionQuery RegionQuery::point(LatLon center, double dist_m) {
  RegionQuery q;
  q.kind = QueryKind::point;
  q.center = center;
  q.dist_m = dist_m;
  return q;
}

RegionQuery RegionQuery::box(BBox bbox) {
  RegionQuery q;
  q.kind = QueryKind::bbox;
  q.bbox = bbox;
  return q;
}

RegionQuery RegionQuery::at_address(std::string address, double dist_m) {
  RegionQuery q;
  q.kind = QueryKind::address;
  q.address = std::move(address);
  q.dist_m = dist_m;
  return q;
}

void RegionQuery::validate() const {
  auto finite_center = [&] {
    return std::isfinite(center.lat) && std::isfinite(center.lon) && std::abs(center.lat) <= 90.0 &&
           std::abs(center.lon) <= 180.0;
  };
  switch (kind) {
    case QueryKind::city:
      if (city_name.empty()) fail(Errc::InvalidArgument, "city query without a city name");
      break;
    case QueryKind::point:
      if (!finite_center()) fail(Errc::InvalidArgument, "point query center out of range");
      if (!(dist_m > 0.0)) fail(Errc::InvalidArgument, "point query needs dist_m > 0");
      break;
    case QueryKind::address:
      if (address.empty()) fail(Errc::InvalidArgument, "address query without an address");
      if (!(dist_m > 0.0)) fail(Errc::InvalidArgument, "address query needs dist_m > 0");
      break;
    case QueryKind::bbox:
      if (!(bbox.south < bbox.north) || !(bbox.west < bbox.east)) {
        fail(Errc::InvalidArgument, "bbox needs south < north and west < east");
      }
      break;
  }
}

std::vector<std::vector<StreetGraph::Arc>> StreetGraph::adjacency() const {
  std::vector<std::vector<Arc>> adj(vertices.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    adj[edges[e].u].push_back({edges[e].v, e});
    adj[edges[e].v].push_back({edges[e].u, e});
  }
  return adj;
}

namespace {

Tags read_tags(const json& element) {
  Tags tags;
  auto it = element.find("tags");
  if (it == element.end() || !it->is_object()) return tags;
  for (const auto& [k, v] : it->items()) {
    tags[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return tags;
}

bool has_tag(const Tags& tags, const std::string& key) { return tags.count(key) != 0; }

bool tag_is(const Tags& tags, const std::string& key, std::string_view value) {
  auto it = tags.find(key);
  return it != tags.end() && it->second == value;
}

}  // namespace

OsmExtract parse_overpass_document(std::string_view raw, std::string source) {
  json doc;
  try {
    doc = json::parse(raw.begin(), raw.end());
  } catch (const json::parse_error& e) {
    fail(Errc::MalformedDocument, e.what());
  }
  if (!doc.is_object() || !doc.contains("elements") || !doc["elements"].is_array()) {
    fail(Errc::MalformedDocument, "expected an object with an 'elements' array");
  }

  OsmExtract out;
  out.provenance.source = std::move(source);
  std::unordered_set<std::int64_t> node_ids;
  std::unordered_set<std::int64_t> way_ids;
  std::vector<Way> ways;

  try {
    for (const auto& el : doc["elements"]) {
      const auto type = el.value("type", std::string{});
      if (type == "node") {
        Node n;
        n.id = el.at("id").get<std::int64_t>();
        n.lat = el.at("lat").get<double>();
        n.lon = el.at("lon").get<double>();
        n.tags = read_tags(el);
        if (!node_ids.insert(n.id).second) {
          ++out.provenance.duplicate_elements;
          continue;
        }
        out.nodes.push_back(std::move(n));
      } else if (type == "way") {
        Way w;
        w.id = el.at("id").get<std::int64_t>();
        if (el.contains("nodes")) w.nodes = el["nodes"].get<std::vector<std::int64_t>>();
        w.tags = read_tags(el);
        if (!way_ids.insert(w.id).second) {
          ++out.provenance.duplicate_elements;
          continue;
        }
        ways.push_back(std::move(w));
      }
      // relations and other element kinds are outside the supported subset
    }
  } catch (const json::exception& e) {
    fail(Errc::MalformedDocument, e.what());
  }

  if (out.nodes.empty()) fail(Errc::EmptyExtract, "document contains no nodes");

  for (auto& w : ways) {
    const bool complete = std::all_of(w.nodes.begin(), w.nodes.end(),
                                      [&](std::int64_t id) { return node_ids.count(id) != 0; });
    if (!complete) {
      ++out.provenance.dropped_ways;
      continue;
    }
    out.ways.push_back(std::move(w));
  }
  return out;
}

std::string serialize_overpass_document(const OsmExtract& extract) {
  json elements = json::array();
  for (const auto& n : extract.nodes) {
    json el = {{"type", "node"}, {"id", n.id}, {"lat", n.lat}, {"lon", n.lon}};
    if (!n.tags.empty()) el["tags"] = n.tags;
    elements.push_back(std::move(el));
  }
  for (const auto& w : extract.ways) {
    json el = {{"type", "way"}, {"id", w.id}, {"nodes", w.nodes}};
    if (!w.tags.empty()) el["tags"] = w.tags;
    elements.push_back(std::move(el));
  }
  json doc = {{"version", 0.6}, {"generator", "gridsynth"}, {"elements", std::move(elements)}};
  return doc.dump(1) + "\n";
}

StreetGraph extract_street_graph(const OsmExtract& extract) {
  std::unordered_map<std::int64_t, const Node*> by_id;
  by_id.reserve(extract.nodes.size());
  for (const auto& n : extract.nodes) by_id.emplace(n.id, &n);

  // Collect used node ids and candidate edges.
  struct RawEdge {
    std::int64_t a, b;
    double length_km;
    std::int64_t way_id;
  };
  std::vector<RawEdge> raw_edges;
  std::vector<std::int64_t> used;
  for (const auto& w : extract.ways) {
    if (!has_tag(w.tags, "highway")) continue;
    for (std::size_t i = 0; i + 1 < w.nodes.size(); ++i) {
      std::int64_t a = w.nodes[i];
      std::int64_t b = w.nodes[i + 1];
      if (a == b) continue;
      const Node* na = by_id.at(a);
      const Node* nb = by_id.at(b);
      const double len = haversine_km({na->lat, na->lon}, {nb->lat, nb->lon});
      if (!(len > 0.0)) continue;  // coincident nodes carry no length
      if (a > b) std::swap(a, b);
      raw_edges.push_back({a, b, len, w.id});
      used.push_back(a);
      used.push_back(b);
    }
  }
  if (raw_edges.empty()) fail(Errc::NoStreets, "extract has no highway-tagged ways");

  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  std::unordered_map<std::int64_t, std::size_t> index;
  index.reserve(used.size());
  for (std::size_t i = 0; i < used.size(); ++i) index.emplace(used[i], i);

  // Parallel segments between the same pair collapse to the shortest one.
  std::sort(raw_edges.begin(), raw_edges.end(), [](const RawEdge& x, const RawEdge& y) {
    if (x.a != y.a) return x.a < y.a;
    if (x.b != y.b) return x.b < y.b;
    if (x.length_km != y.length_km) return x.length_km < y.length_km;
    return x.way_id < y.way_id;
  });
  raw_edges.erase(std::unique(raw_edges.begin(), raw_edges.end(),
                              [](const RawEdge& x, const RawEdge& y) { return x.a == y.a && x.b == y.b; }),
                  raw_edges.end());

  // Connected components by union-find.
  std::vector<std::size_t> parent(used.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& e : raw_edges) {
    auto ra = find(index[e.a]);
    auto rb = find(index[e.b]);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<std::size_t> size(used.size(), 0);
  for (std::size_t i = 0; i < used.size(); ++i) ++size[find(i)];
  // Largest component; ties go to the one holding the lowest vertex id.
  std::size_t best = find(0);
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (find(i) == i && size[i] > size[best]) best = i;
  }

  StreetGraph g;
  std::vector<std::size_t> remap(used.size(), SIZE_MAX);
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (find(i) != best) {
      ++g.dropped_vertices;
      continue;
    }
    remap[i] = g.vertices.size();
    const Node* n = by_id.at(used[i]);
    g.vertices.push_back({n->id, {n->lat, n->lon}});
  }
  for (const auto& e : raw_edges) {
    const auto u = remap[index[e.a]];
    const auto v = remap[index[e.b]];
    if (u == SIZE_MAX || v == SIZE_MAX) continue;
    g.edges.push_back({u, v, e.length_km, e.way_id});
  }
  return g;
}

namespace {

LatLon centroid_of_way(const Way& w, const std::unordered_map<std::int64_t, const Node*>& by_id) {
  std::size_t count = w.nodes.size();
  // A closed ring repeats its first vertex; count it once.
  if (count > 1 && w.nodes.front() == w.nodes.back()) --count;
  double lat = 0.0;
  double lon = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const Node* n = by_id.at(w.nodes[i]);
    lat += n->lat;
    lon += n->lon;
  }
  return {lat / static_cast<double>(count), lon / static_cast<double>(count)};
}

}  // namespace

PowerFeatures extract_power_features(const OsmExtract& extract) {
  std::unordered_map<std::int64_t, const Node*> by_id;
  by_id.reserve(extract.nodes.size());
  for (const auto& n : extract.nodes) by_id.emplace(n.id, &n);

  auto is_generator = [](const Tags& t) { return tag_is(t, "power", "generator") || tag_is(t, "power", "plant"); };

  PowerFeatures f;
  for (const auto& n : extract.nodes) {
    if (tag_is(n.tags, "power", "substation")) f.substations.push_back({n.id, {n.lat, n.lon}, n.tags});
    if (is_generator(n.tags)) f.generators.push_back({n.id, {n.lat, n.lon}, n.tags});
    if (has_tag(n.tags, "building")) f.buildings.push_back({n.lat, n.lon});
  }
  for (const auto& w : extract.ways) {
    if (w.nodes.empty()) continue;
    if (tag_is(w.tags, "power", "substation")) f.substations.push_back({w.id, centroid_of_way(w, by_id), w.tags});
    if (is_generator(w.tags)) f.generators.push_back({w.id, centroid_of_way(w, by_id), w.tags});
    if (has_tag(w.tags, "building")) f.buildings.push_back(centroid_of_way(w, by_id));
    if (tag_is(w.tags, "power", "line") && w.nodes.size() >= 2) {
      LineFeature line;
      line.way_id = w.id;
      line.node_ids = w.nodes;
      line.tags = w.tags;
      for (auto id : w.nodes) {
        const Node* n = by_id.at(id);
        line.polyline.push_back({n->lat, n->lon});
      }
      f.transmission_ways.push_back(std::move(line));
    }
  }
  auto by_feature_id = [](const PointFeature& a, const PointFeature& b) { return a.id < b.id; };
  std::stable_sort(f.substations.begin(), f.substations.end(), by_feature_id);
  std::stable_sort(f.generators.begin(), f.generators.end(), by_feature_id);
  return f;
}

}  // namespace gridsynth::osm
