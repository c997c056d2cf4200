#include <unordered_map>

#include <nlohmann/json.hpp>

#include "gridsynth/error.hpp"
#include "gridsynth/topology.hpp"
#include "gridsynth/util.hpp"

namespace gridsynth {

using nlohmann::json;

namespace {

std::string_view kind_name(BusKind k) {
  switch (k) {
    case BusKind::mv: return "mv";
    case BusKind::lv: return "lv";
    case BusKind::substation: return "substation";
  }
  return "mv";
}

BusKind parse_kind(const std::string& s) {
  if (s == "mv") return BusKind::mv;
  if (s == "lv") return BusKind::lv;
  if (s == "substation") return BusKind::substation;
  fail(Errc::SchemaMismatch, "unknown bus kind '" + s + "'");
}

template <class T>
T field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(Errc::SchemaMismatch, std::string("topology field '") + key + "' missing");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    fail(Errc::SchemaMismatch, std::string("topology field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string serialize_topology(const GridTopology& topo) {
  json doc;
  doc["kind"] = "topology";
  doc["name"] = topo.name;
  doc["distance_method"] = std::string(to_string(topo.distance_method));
  doc["zones"] = topo.zones.zones;

  json buses = json::array();
  for (std::size_t b = 0; b < topo.buses.size(); ++b) {
    const auto& bus = topo.buses[b];
    buses.push_back({{"id", bus.id},
                     {"lat", bus.pos.lat},
                     {"lon", bus.pos.lon},
                     {"voltage_kv", bus.voltage_kv},
                     {"kind", kind_name(bus.kind)},
                     {"feeder", bus.feeder},
                     {"load_point", bus.load_point},
                     {"building_scale", bus.building_scale},
                     {"street_vertex", bus.street_vertex},
                     {"zone", topo.zones.node_zone.at(b)},
                     {"distance", topo.zones.node_distance_km.at(b)}});
  }
  doc["buses"] = std::move(buses);

  json lines = json::array();
  for (std::size_t l = 0; l < topo.branches.size(); ++l) {
    const auto& br = topo.branches[l];
    lines.push_back({{"id", br.id},
                     {"from", topo.buses[br.from].id},
                     {"to", topo.buses[br.to].id},
                     {"length_km", br.length_km},
                     {"zone", topo.zones.line_zone.at(l)}});
  }
  doc["branches"] = std::move(lines);

  json trafos = json::array();
  for (const auto& t : topo.transformers) {
    trafos.push_back({{"id", t.id},
                      {"hv_bus", topo.buses[t.hv_bus].id},
                      {"lv_bus", topo.buses[t.lv_bus].id},
                      {"rating_kva", t.rating_kva},
                      {"vk_percent", t.vk_percent},
                      {"vkr_percent", t.vkr_percent}});
  }
  doc["transformers"] = std::move(trafos);

  json feeders = json::array();
  for (const auto& f : topo.feeders) {
    feeders.push_back({{"substation_id", f.substation_id}, {"source_bus", topo.buses[f.source_bus].id}});
  }
  doc["feeders"] = std::move(feeders);

  const auto& tl = topo.transmission;
  json hv = json::object();
  json hv_buses = json::array();
  for (const auto& b : tl.hv_buses) {
    hv_buses.push_back(
        {{"id", b.id}, {"lat", b.pos.lat}, {"lon", b.pos.lon}, {"voltage_kv", b.voltage_kv}, {"generation", b.generation}});
  }
  json hv_lines = json::array();
  for (const auto& l : tl.hv_lines) {
    hv_lines.push_back({{"id", l.id},
                        {"from", tl.hv_buses[l.from].id},
                        {"to", tl.hv_buses[l.to].id},
                        {"length_km", l.length_km},
                        {"r_ohm_per_km", l.r_ohm_per_km},
                        {"x_ohm_per_km", l.x_ohm_per_km}});
  }
  json gts = json::array();
  for (const auto& g : tl.grid_transformers) {
    gts.push_back({{"id", g.id},
                   {"hv_bus", tl.hv_buses[g.hv_bus].id},
                   {"substation_bus", topo.buses[g.substation_bus].id},
                   {"rating_mva", g.rating_mva},
                   {"vk_percent", g.vk_percent}});
  }
  hv["hv_buses"] = std::move(hv_buses);
  hv["hv_lines"] = std::move(hv_lines);
  hv["grid_transformers"] = std::move(gts);
  hv["external_source"] = tl.hv_buses.empty() ? std::string() : tl.hv_buses[tl.external_source].id;
  doc["transmission"] = std::move(hv);
  return doc.dump(1) + "\n";
}

GridTopology parse_topology(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::SchemaMismatch, std::string("topology document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("kind", "") != "topology") {
    fail(Errc::SchemaMismatch, "document is not a topology");
  }

  GridTopology topo;
  topo.name = field<std::string>(doc, "name");
  topo.distance_method = parse_distance_method(field<std::string>(doc, "distance_method"));
  topo.zones.zones = field<int>(doc, "zones");

  std::unordered_map<std::string, std::size_t> index;
  auto lookup = [&](const std::string& id) {
    auto it = index.find(id);
    if (it == index.end()) fail(Errc::SchemaMismatch, "unknown bus '" + id + "'");
    return it->second;
  };

  for (const auto& b : field<json>(doc, "buses")) {
    Bus bus;
    bus.id = field<std::string>(b, "id");
    bus.pos = {field<double>(b, "lat"), field<double>(b, "lon")};
    bus.voltage_kv = field<double>(b, "voltage_kv");
    bus.kind = parse_kind(field<std::string>(b, "kind"));
    bus.feeder = field<std::size_t>(b, "feeder");
    bus.load_point = field<bool>(b, "load_point");
    bus.building_scale = field<double>(b, "building_scale");
    bus.street_vertex = field<std::int64_t>(b, "street_vertex");
    if (!index.emplace(bus.id, topo.buses.size()).second) fail(Errc::SchemaMismatch, "duplicate bus id " + bus.id);
    topo.zones.node_zone.push_back(field<int>(b, "zone"));
    topo.zones.node_distance_km.push_back(field<double>(b, "distance"));
    topo.buses.push_back(std::move(bus));
  }
  for (const auto& l : field<json>(doc, "branches")) {
    topo.branches.push_back({field<std::string>(l, "id"), lookup(field<std::string>(l, "from")),
                             lookup(field<std::string>(l, "to")), field<double>(l, "length_km")});
    topo.zones.line_zone.push_back(field<int>(l, "zone"));
  }
  for (const auto& t : field<json>(doc, "transformers")) {
    topo.transformers.push_back({field<std::string>(t, "id"), lookup(field<std::string>(t, "hv_bus")),
                                 lookup(field<std::string>(t, "lv_bus")), field<double>(t, "rating_kva"),
                                 field<double>(t, "vk_percent"), field<double>(t, "vkr_percent")});
  }
  for (const auto& f : field<json>(doc, "feeders")) {
    topo.feeders.push_back({field<std::int64_t>(f, "substation_id"), lookup(field<std::string>(f, "source_bus"))});
  }
  for (const auto& bus : topo.buses) {
    if (bus.feeder >= topo.feeders.size()) fail(Errc::SchemaMismatch, "bus " + bus.id + " names a missing feeder");
  }

  const auto& hv = field<json>(doc, "transmission");
  auto& tl = topo.transmission;
  std::unordered_map<std::string, std::size_t> hv_index;
  for (const auto& b : field<json>(hv, "hv_buses")) {
    HvBus bus{field<std::string>(b, "id"), {field<double>(b, "lat"), field<double>(b, "lon")},
              field<double>(b, "voltage_kv"), field<bool>(b, "generation")};
    hv_index.emplace(bus.id, tl.hv_buses.size());
    tl.hv_buses.push_back(std::move(bus));
  }
  auto hv_lookup = [&](const std::string& id) {
    auto it = hv_index.find(id);
    if (it == hv_index.end()) fail(Errc::SchemaMismatch, "unknown hv bus '" + id + "'");
    return it->second;
  };
  for (const auto& l : field<json>(hv, "hv_lines")) {
    tl.hv_lines.push_back({field<std::string>(l, "id"), hv_lookup(field<std::string>(l, "from")),
                           hv_lookup(field<std::string>(l, "to")), field<double>(l, "length_km"),
                           field<double>(l, "r_ohm_per_km"), field<double>(l, "x_ohm_per_km")});
  }
  for (const auto& g : field<json>(hv, "grid_transformers")) {
    tl.grid_transformers.push_back({field<std::string>(g, "id"), hv_lookup(field<std::string>(g, "hv_bus")),
                                    lookup(field<std::string>(g, "substation_bus")), field<double>(g, "rating_mva"),
                                    field<double>(g, "vk_percent")});
  }
  if (!tl.hv_buses.empty()) tl.external_source = hv_lookup(field<std::string>(hv, "external_source"));
  return topo;
}

std::string topology_hash(const GridTopology& topo) { return content_hash(serialize_topology(topo)); }

}  // namespace gridsynth
