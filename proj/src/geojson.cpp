#include <nlohmann/json.hpp>

#include "gridsynth/error.hpp"
#include "gridsynth/gridio.hpp"
#include "gridsynth/util.hpp"

namespace gridsynth {

std::string render_geojson(const GridTopology& topo, const GridSample* sample) {
  using nlohmann::json;
  if (sample && (sample->buses.size() != topo.buses.size() || sample->lines.size() != topo.branches.size())) {
    fail(Errc::HashMismatch, "sample does not match the topology");
  }
  static constexpr const char* kinds[] = {"mv", "lv", "substation"};
  json features = json::array();
  for (std::size_t b = 0; b < topo.buses.size(); ++b) {
    const auto& bus = topo.buses[b];
    json props = {{"id", bus.id},
                  {"kind", kinds[static_cast<int>(bus.kind)]},
                  {"zone", topo.zones.node_zone.empty() ? 1 : topo.zones.node_zone[b]},
                  {"substation_id", topo.feeders.at(bus.feeder).substation_id}};
    if (sample) {
      const auto& st = sample->buses[b];
      props["phase"] = to_string(st.phase);
      props["p_kw"] = st.p_kw[0] + st.p_kw[1] + st.p_kw[2];
      props["q_kvar"] = st.q_kvar[0] + st.q_kvar[1] + st.q_kvar[2];
    }
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {bus.pos.lon, bus.pos.lat}}}},
                        {"properties", std::move(props)}});
  }
  for (std::size_t i = 0; i < topo.branches.size(); ++i) {
    const auto& br = topo.branches[i];
    const auto& a = topo.buses[br.from].pos;
    const auto& c = topo.buses[br.to].pos;
    json props = {{"id", br.id},
                  {"kind", "line"},
                  {"zone", topo.zones.line_zone.empty() ? 1 : topo.zones.line_zone[i]},
                  {"substation_id", topo.feeders.at(topo.buses[br.to].feeder).substation_id},
                  {"length_km", br.length_km}};
    if (sample) {
      props["phases"] = to_string(sample->buses[br.to].phase);
      props["r1_ohm"] = sample->lines[i].r1_ohm;
      props["x1_ohm"] = sample->lines[i].x1_ohm;
    }
    features.push_back(
        {{"type", "Feature"},
         {"geometry", {{"type", "LineString"}, {"coordinates", {{a.lon, a.lat}, {c.lon, c.lat}}}}},
         {"properties", std::move(props)}});
  }
  json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  return doc.dump(1) + "\n";
}

void write_geojson(const GridTopology& topo, const GridSample* sample, const std::string& path) {
  write_file(path, render_geojson(topo, sample));
}

}  // namespace gridsynth
