#include <nlohmann/json.hpp>

#include "gridsynth/error.hpp"
#include "gridsynth/gridio.hpp"
#include "gridsynth/util.hpp"

namespace gridsynth {

namespace {

std::string_view kind_name(BusKind k) {
  switch (k) {
    case BusKind::mv: return "mv";
    case BusKind::lv: return "lv";
    case BusKind::substation: return "substation";
  }
  return "mv";
}

}  // namespace

std::string render_grid_tables(const GridSample& sample, const GridTopology& topo) {
  using nlohmann::json;
  if (sample.buses.size() != topo.buses.size() || sample.lines.size() != topo.branches.size()) {
    fail(Errc::HashMismatch, "sample does not match the topology");
  }
  const auto& tl = topo.transmission;
  json bus = json::array(), line = json::array(), load = json::array(), trafo = json::array(),
       ext = json::array(), rel = json::array();

  for (const auto& h : tl.hv_buses) {
    bus.push_back({{"id", h.id}, {"vn_kv", h.voltage_kv}, {"lat", h.pos.lat}, {"lon", h.pos.lon}, {"kind", "hv"}});
  }
  for (const auto& b : topo.buses) {
    bus.push_back({{"id", b.id}, {"vn_kv", b.voltage_kv}, {"lat", b.pos.lat}, {"lon", b.pos.lon},
                   {"kind", kind_name(b.kind)}});
  }
  for (const auto& l : tl.hv_lines) {
    line.push_back({{"id", l.id}, {"from", tl.hv_buses[l.from].id}, {"to", tl.hv_buses[l.to].id},
                    {"length_km", l.length_km}, {"r_ohm_per_km", l.r_ohm_per_km},
                    {"x_ohm_per_km", l.x_ohm_per_km}, {"phases", "ABC"}});
  }
  for (std::size_t i = 0; i < topo.branches.size(); ++i) {
    const auto& br = topo.branches[i];
    line.push_back({{"id", br.id}, {"from", topo.buses[br.from].id}, {"to", topo.buses[br.to].id},
                    {"length_km", br.length_km}, {"r_ohm_per_km", sample.lines[i].r1_ohm / br.length_km},
                    {"x_ohm_per_km", sample.lines[i].x1_ohm / br.length_km},
                    {"phases", to_string(sample.buses[br.to].phase)}});
  }
  static constexpr const char* letter[] = {"A", "B", "C"};
  for (std::size_t b = 0; b < topo.buses.size(); ++b) {
    const auto& st = sample.buses[b];
    if (topo.buses[b].load_point) {
      for (int k = 0; k < 3; ++k) {
        if (!has_conductor(st.phase, k)) continue;
        load.push_back({{"bus", topo.buses[b].id}, {"phase", letter[k]}, {"p_kw", st.p_kw[k]}, {"q_kvar", st.q_kvar[k]}});
      }
    }
    rel.push_back({{"bus", topo.buses[b].id}, {"interruptions_per_year", st.interruptions_per_year},
                   {"duration_h", st.duration_h}});
  }
  for (const auto& g : tl.grid_transformers) {
    trafo.push_back({{"id", g.id}, {"hv_bus", tl.hv_buses[g.hv_bus].id}, {"lv_bus", topo.buses[g.substation_bus].id},
                     {"sn_kva", g.rating_mva * 1000.0}, {"vk_percent", g.vk_percent}, {"vkr_percent", 0.0}});
  }
  for (const auto& t : topo.transformers) {
    trafo.push_back({{"id", t.id}, {"hv_bus", topo.buses[t.hv_bus].id}, {"lv_bus", topo.buses[t.lv_bus].id},
                     {"sn_kva", t.rating_kva}, {"vk_percent", t.vk_percent}, {"vkr_percent", t.vkr_percent}});
  }
  if (!tl.hv_buses.empty()) {
    ext.push_back({{"bus", tl.hv_buses[tl.external_source].id}});
  } else {
    for (const auto& f : topo.feeders) ext.push_back({{"bus", topo.buses[f.source_bus].id}});
  }

  json doc = {{"kind", "grid_tables"},
              {"name", topo.name},
              {"sample_idx", sample.sample_idx},
              {"topology_hash", sample.topology_hash},
              {"bus", std::move(bus)},
              {"line", std::move(line)},
              {"load", std::move(load)},
              {"trafo", std::move(trafo)},
              {"ext_grid", std::move(ext)},
              {"reliability", std::move(rel)}};
  return doc.dump(1) + "\n";
}

void write_grid_tables(const GridSample& sample, const GridTopology& topo, const std::string& path) {
  write_file(path, render_grid_tables(sample, topo));
}

}  // namespace gridsynth
