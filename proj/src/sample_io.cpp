#include <filesystem>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "gridsynth/error.hpp"
#include "gridsynth/synthesis.hpp"
#include "gridsynth/util.hpp"

namespace gridsynth {

using nlohmann::json;

namespace {

template <class T>
T get(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(Errc::SchemaMismatch, std::string("field '") + key + "' missing");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    fail(Errc::SchemaMismatch, std::string("field '") + key + "': " + e.what());
  }
}

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::SchemaMismatch, std::string(what) + " is not valid JSON: " + e.what());
  }
}

}  // namespace

std::string sample_file_name(std::size_t k) { return "sample_" + std::to_string(k) + ".json"; }

std::string serialize_sample(const GridSample& sample, const GridTopology& topo) {
  if (sample.buses.size() != topo.buses.size() || sample.lines.size() != topo.branches.size()) {
    fail(Errc::HashMismatch, "sample does not match the topology");
  }
  json doc;
  doc["kind"] = "grid_sample";
  doc["sample_idx"] = sample.sample_idx;
  doc["draw_idx"] = sample.draw_idx;
  doc["topology_hash"] = sample.topology_hash;
  json buses = json::array();
  for (std::size_t b = 0; b < sample.buses.size(); ++b) {
    const auto& s = sample.buses[b];
    buses.push_back({{"id", topo.buses[b].id},
                     {"phase", std::string(to_string(s.phase))},
                     {"p_kw", s.p_kw},
                     {"q_kvar", s.q_kvar},
                     {"interruptions_per_year", s.interruptions_per_year},
                     {"duration_h", s.duration_h}});
  }
  doc["buses"] = std::move(buses);
  json lines = json::array();
  for (std::size_t l = 0; l < sample.lines.size(); ++l) {
    lines.push_back({{"id", topo.branches[l].id}, {"r1_ohm", sample.lines[l].r1_ohm}, {"x1_ohm", sample.lines[l].x1_ohm}});
  }
  doc["lines"] = std::move(lines);
  return doc.dump(1) + "\n";
}

GridSample parse_sample(std::string_view text, const GridTopology& topo) {
  const auto doc = parse_json(text, "sample");
  if (!doc.is_object() || doc.value("kind", "") != "grid_sample") fail(Errc::SchemaMismatch, "not a grid sample");
  GridSample s;
  s.sample_idx = get<std::size_t>(doc, "sample_idx");
  s.draw_idx = get<std::size_t>(doc, "draw_idx");
  s.topology_hash = get<std::string>(doc, "topology_hash");
  const auto buses = get<json>(doc, "buses");
  const auto lines = get<json>(doc, "lines");
  if (buses.size() != topo.buses.size() || lines.size() != topo.branches.size()) {
    fail(Errc::HashMismatch, "sample element counts differ from the topology");
  }
  s.buses.resize(buses.size());
  for (std::size_t b = 0; b < buses.size(); ++b) {
    const auto& j = buses[b];
    if (get<std::string>(j, "id") != topo.buses[b].id) fail(Errc::HashMismatch, "sample bus order differs from topology");
    auto& st = s.buses[b];
    st.phase = parse_phase(get<std::string>(j, "phase"));
    st.p_kw = get<std::array<double, 3>>(j, "p_kw");
    st.q_kvar = get<std::array<double, 3>>(j, "q_kvar");
    st.interruptions_per_year = get<long>(j, "interruptions_per_year");
    st.duration_h = get<double>(j, "duration_h");
  }
  s.lines.resize(lines.size());
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const auto& j = lines[l];
    if (get<std::string>(j, "id") != topo.branches[l].id) fail(Errc::HashMismatch, "sample line order differs from topology");
    s.lines[l] = {get<double>(j, "r1_ohm"), get<double>(j, "x1_ohm")};
  }
  return s;
}

void write_ensemble(const std::string& dir, const Ensemble& ensemble, const GridTopology& topo,
                    const EnsembleMeta& meta, unsigned jobs) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Errc::IoError, "cannot create " + dir + ": " + ec.message());
  // Stale samples from a larger earlier run would be picked up on read.
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("sample_", 0) == 0 && entry.path().extension() == ".json") fs::remove(entry.path());
  }
  json m;
  m["kind"] = "ensemble";
  m["topology_hash"] = meta.topology_hash;
  m["seed"] = meta.seed;
  m["n"] = meta.n;
  m["power_factor"] = meta.power_factor;
  m["posteriors"] = meta.posterior_hashes;
  write_file(fs::path(dir) / "meta.json", m.dump(1) + "\n");
  write_file(fs::path(dir) / "topology.json", serialize_topology(topo));
  parallel_for(ensemble.samples.size(), jobs, [&](std::size_t k) {
    write_file(fs::path(dir) / sample_file_name(k), serialize_sample(ensemble.samples[k], topo));
  });
}

LoadedEnsemble read_ensemble(const std::string& dir, unsigned jobs) {
  namespace fs = std::filesystem;
  LoadedEnsemble out;
  const auto m = parse_json(read_file(fs::path(dir) / "meta.json"), "ensemble meta");
  if (!m.is_object() || m.value("kind", "") != "ensemble") fail(Errc::SchemaMismatch, "not an ensemble meta document");
  out.meta.topology_hash = get<std::string>(m, "topology_hash");
  out.meta.seed = get<std::uint64_t>(m, "seed");
  out.meta.n = get<std::size_t>(m, "n");
  out.meta.power_factor = get<double>(m, "power_factor");
  out.meta.posterior_hashes = get<std::map<std::string, std::string>>(m, "posteriors");
  if (out.meta.n == 0) fail(Errc::EmptyEnsemble, "ensemble declares zero samples");

  out.topology = parse_topology(read_file(fs::path(dir) / "topology.json"));
  if (topology_hash(out.topology) != out.meta.topology_hash) {
    fail(Errc::HashMismatch, "topology.json does not match the ensemble's topology hash");
  }
  out.ensemble.topology_hash = out.meta.topology_hash;
  out.ensemble.seed = out.meta.seed;
  out.ensemble.samples.resize(out.meta.n);
  parallel_for(out.meta.n, jobs, [&](std::size_t k) {
    auto s = parse_sample(read_file(fs::path(dir) / sample_file_name(k)), out.topology);
    if (s.topology_hash != out.meta.topology_hash) fail(Errc::HashMismatch, sample_file_name(k) + " has another topology");
    if (s.sample_idx != k) fail(Errc::SchemaMismatch, sample_file_name(k) + " declares another index");
    out.ensemble.samples[k] = std::move(s);
  });
  return out;
}

}  // namespace gridsynth
