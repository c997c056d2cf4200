#include "gridsynth/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>

#include "gridsynth/error.hpp"
#include "gridsynth/gridio.hpp"
#include "gridsynth/hostcap.hpp"
#include "gridsynth/models.hpp"
#include "gridsynth/osm.hpp"
#include "gridsynth/powerflow.hpp"
#include "gridsynth/synthesis.hpp"
#include "gridsynth/topology.hpp"
#include "gridsynth/util.hpp"

namespace gridsynth::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Raised for flag values that parse but make no sense; maps to exit 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0x67726964;
  unsigned jobs = 1;
  bool quiet = false;
};

struct Manifest {
  std::string command;
  json args = json::object();
  std::map<std::string, std::string> inputs;  // path -> content hash
  std::vector<std::string> outputs;

  void input(const std::string& path) { inputs[path] = content_hash(read_file(path)); }

  void write(const fs::path& path) const {
    json doc = {{"kind", "manifest"},
                {"tool", "gridsynth"},
                {"version", std::string(kVersion)},
                {"command", command},
                {"args", args},
                {"inputs", inputs},
                {"outputs", outputs}};
    write_file(path, doc.dump(1) + "\n");
  }
};

void note(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

std::pair<double, double> parse_pair(const std::string& text, const char* what) {
  const auto parts = split(text, ',');
  bool ok1 = false, ok2 = false;
  if (parts.size() == 2) {
    const double a = parse_double(trim(parts[0]), &ok1);
    const double b = parse_double(trim(parts[1]), &ok2);
    if (ok1 && ok2) return {a, b};
  }
  throw UsageError(std::string(what) + " expects two comma-separated numbers, got '" + text + "'");
}

fs::path file_manifest(const std::string& out) { return fs::path(out + ".manifest.json"); }

// --- ingest -------------------------------------------------------------------

struct IngestArgs {
  std::string input, out, kind, city, address, bbox, center, overpass_url, geocoder_url;
  double dist_m = 7000.0;
  int attempts = 3;
  double backoff_s = 2.0;
};

int do_ingest(const Globals& g, const IngestArgs& a) {
  Manifest m;
  m.command = "ingest";
  std::string raw;
  if (!a.input.empty()) {
    raw = read_file(a.input);
    m.input(a.input);
    m.args["input"] = a.input;
  } else {
    osm::RegionQuery q;
    if (a.kind == "point") {
      const auto [lat, lon] = parse_pair(a.center, "--center");
      q = osm::RegionQuery::point({lat, lon}, a.dist_m);
    } else if (a.kind == "bbox") {
      const auto parts = split(a.bbox, ',');
      if (parts.size() != 4) throw UsageError("--bbox expects south,west,north,east");
      osm::BBox b;
      b.south = parse_double(trim(parts[0]));
      b.west = parse_double(trim(parts[1]));
      b.north = parse_double(trim(parts[2]));
      b.east = parse_double(trim(parts[3]));
      q = osm::RegionQuery::box(b);
    } else if (a.kind == "city") {
      q = osm::RegionQuery::city(a.city);
    } else if (a.kind == "address") {
      q = osm::RegionQuery::at_address(a.address, a.dist_m);
    } else {
      throw UsageError("ingest needs --input FILE or --query {point|bbox|city|address}");
    }
    std::string endpoint = a.overpass_url;
    if (endpoint.empty()) {
      if (const char* env = std::getenv("GRIDSYNTH_OVERPASS_URL")) endpoint = env;
    }
    if (endpoint.empty()) endpoint = "https://overpass-api.de/api/interpreter";
    osm::Geocoder geo = a.geocoder_url.empty() ? osm::Geocoder{} : osm::http_geocoder(a.geocoder_url);
    auto res = osm::fetch_region(q, endpoint, {a.attempts, a.backoff_s}, geo);
    raw = std::move(res.raw);
    m.args["query"] = a.kind;
    m.args["center"] = a.center;
    m.args["bbox"] = a.bbox;
    m.args["city"] = a.city;
    m.args["address"] = a.address;
    m.args["dist_m"] = a.dist_m;
    m.args["overpass_url"] = endpoint;
  }
  const auto extract = osm::parse_overpass_document(raw, a.input);
  if (extract.nodes.empty() && extract.ways.empty()) fail(Errc::EmptyExtract, "extract holds no elements");
  write_file(a.out, raw);
  m.outputs.push_back(a.out);
  m.write(file_manifest(a.out));
  note(g, "ingest: " + std::to_string(extract.nodes.size()) + " nodes, " + std::to_string(extract.ways.size()) +
              " ways -> " + a.out);
  return kOk;
}

// --- topology -----------------------------------------------------------------

struct TopologyArgs {
  std::string extract, out, geojson, name = "synthetic", distance = "topological";
  int zones = 5;
  double mv_kv = 13.8;
  double lv_kv = 0.22;
  std::size_t max_cluster = 8;
  std::vector<std::string> inject;
};

int do_topology(const Globals& g, const TopologyArgs& a) {
  TopologyOptions opt;
  opt.name = a.name;
  opt.zones = a.zones;
  opt.mv_kv = a.mv_kv;
  opt.lv_kv = a.lv_kv;
  opt.max_cluster = a.max_cluster;
  opt.distance_method = parse_distance_method(a.distance);
  if (opt.distance_method == DistanceMethod::electrical) {
    throw UsageError("electrical zoning needs impedances; build topologically and rezone after learning");
  }
  if (a.zones < 1) throw UsageError("--zones must be >= 1");
  if (a.max_cluster < 1) throw UsageError("--max-cluster must be >= 1");
  for (const auto& s : a.inject) {
    const auto [lat, lon] = parse_pair(s, "--inject-substation");
    opt.injected_substations.push_back({lat, lon});
  }
  const auto raw = read_file(a.extract);
  const auto extract = osm::parse_overpass_document(raw, a.extract);
  const auto street = osm::extract_street_graph(extract);
  const auto power = osm::extract_power_features(extract);
  TopologyReport report;
  const auto topo = build_topology(street, power, opt, &report);
  write_file(a.out, serialize_topology(topo));

  Manifest m;
  m.command = "topology";
  m.input(a.extract);
  m.args = {{"extract", a.extract}, {"name", a.name},   {"zones", a.zones},
            {"mv_kv", a.mv_kv},     {"lv_kv", a.lv_kv}, {"max_cluster", a.max_cluster},
            {"distance", a.distance}, {"inject_substation", a.inject}};
  m.outputs.push_back(a.out);
  if (!a.geojson.empty()) {
    write_geojson(topo, nullptr, a.geojson);
    m.outputs.push_back(a.geojson);
  }
  m.write(file_manifest(a.out));
  note(g, "topology: " + std::to_string(topo.buses.size()) + " buses, " + std::to_string(topo.branches.size()) +
              " lines, " + std::to_string(topo.transformers.size()) + " transformers, " +
              std::to_string(topo.feeders.size()) + " feeders");
  if (report.dropped_street_vertices) {
    note(g, "topology: " + std::to_string(report.dropped_street_vertices) + " unreachable street vertices dropped");
  }
  return kOk;
}

// --- learn --------------------------------------------------------------------

struct LearnArgs {
  std::string bus_records, line_records, prior, out;
  int zones = 5;
  std::size_t steps = 20000;
  std::size_t burn_in = 0;  // 0: half the steps
  std::size_t thin = 20;
  std::size_t draws = 500;
  bool emit_defaults = false;
};

int do_learn(const Globals& g, const LearnArgs& a) {
  if (a.zones < 1) throw UsageError("--zones must be >= 1");
  Manifest m;
  m.command = "learn";
  m.args = {{"zones", a.zones}, {"seed", g.seed}};
  std::vector<AnyPosterior> posts;
  if (a.emit_defaults) {
    m.args["emit_defaults"] = true;
    const auto d = default_models(a.zones);
    posts = {d.power, d.impedance, d.frequency, d.duration};
  } else {
    if (a.bus_records.empty() && a.line_records.empty()) {
      throw UsageError("learn needs --bus-records and/or --line-records (or --emit-defaults)");
    }
    Priors priors;
    if (!a.prior.empty()) {
      priors = parse_priors(read_file(a.prior));
      m.input(a.prior);
    }
    McmcConfig cfg;
    cfg.steps = a.steps;
    cfg.burn_in = a.burn_in ? a.burn_in : a.steps / 2;
    cfg.thin = a.thin;
    cfg.n_draws_kept = a.draws;
    cfg.seed = g.seed;
    cfg.validate();
    m.args.update({{"steps", cfg.steps}, {"burn_in", cfg.burn_in}, {"thin", cfg.thin}, {"draws", cfg.n_draws_kept},
                   {"prior", a.prior}});
    LearnReport rep;
    if (!a.bus_records.empty()) {
      const auto buses = parse_bus_records(read_file(a.bus_records));
      m.input(a.bus_records);
      m.args["bus_records"] = a.bus_records;
      posts.push_back(learn_power(buses, a.zones, priors, cfg, &rep));
      note(g, "learn: power acceptance " + format_sig(rep.acceptance, 3));
      posts.push_back(learn_frequency(buses, a.zones, priors, cfg, &rep));
      note(g, "learn: frequency acceptance " + format_sig(rep.acceptance, 3));
      posts.push_back(learn_duration(buses, a.zones, priors, cfg, &rep));
      note(g, "learn: duration acceptance " + format_sig(rep.acceptance, 3));
    }
    if (!a.line_records.empty()) {
      const auto lines = parse_line_records(read_file(a.line_records));
      m.input(a.line_records);
      m.args["line_records"] = a.line_records;
      posts.push_back(learn_impedance(lines, a.zones, priors, cfg, &rep));
      if (rep.skipped_records) note(g, "learn: skipped " + std::to_string(rep.skipped_records) + " line records");
    }
  }
  for (const auto& p : posts) {
    const auto path = (fs::path(a.out) / posterior_file_name(kind_of(p))).string();
    save_posterior(p, path);
    m.outputs.push_back(posterior_file_name(kind_of(p)));
  }
  m.write(fs::path(a.out) / "manifest.json");
  note(g, "learn: wrote " + std::to_string(posts.size()) + " posteriors to " + a.out);
  return kOk;
}

// --- generate -----------------------------------------------------------------

struct GenerateArgs {
  std::string topo, params_dir = "default", out;
  std::size_t samples = 100;
  double pf = 0.95;
};

int do_generate(const Globals& g, const GenerateArgs& a) {
  if (a.samples == 0) throw UsageError("--samples must be >= 1");
  const auto topo_text = read_file(a.topo);
  const auto topo = parse_topology(topo_text);
  const int zones = topo.zones.zones;

  Manifest m;
  m.command = "generate";
  m.input(a.topo);
  EnsembleMeta meta;
  auto load = [&](ModelKind kind) {
    std::string source = "default";
    if (a.params_dir != "default") {
      source = (fs::path(a.params_dir) / posterior_file_name(kind)).string();
      if (!fs::exists(source)) fail(Errc::MissingFile, "missing posterior " + source);
      m.input(source);
      meta.posterior_hashes[posterior_file_name(kind)] = content_hash(read_file(source));
    } else {
      meta.posterior_hashes[posterior_file_name(kind)] = "default";
    }
    auto p = load_posterior(source, kind, zones);
    if (zones_of(p) != zones) {
      fail(Errc::ZoneCountMismatch, "posterior " + posterior_file_name(kind) + " has " + std::to_string(zones_of(p)) +
                                        " zones, topology has " + std::to_string(zones));
    }
    return p;
  };
  ModelSet models{std::get<PowerPosterior>(load(ModelKind::power)),
                  std::get<ImpedancePosterior>(load(ModelKind::impedance)),
                  std::get<FrequencyPosterior>(load(ModelKind::frequency)),
                  std::get<DurationPosterior>(load(ModelKind::duration))};
  SynthesisOptions opt;
  opt.power_factor = a.pf;
  const auto ens = generate_ensemble(topo, models, a.samples, g.seed, opt, g.jobs);
  meta.topology_hash = ens.topology_hash;
  meta.seed = g.seed;
  meta.n = a.samples;
  meta.power_factor = a.pf;
  write_ensemble(a.out, ens, topo, meta, g.jobs);

  m.args = {{"topo", a.topo}, {"params_dir", a.params_dir}, {"samples", a.samples}, {"seed", g.seed}, {"pf", a.pf}};
  m.outputs = {"meta.json", "topology.json"};
  for (std::size_t k = 0; k < a.samples; ++k) m.outputs.push_back(sample_file_name(k));
  m.write(fs::path(a.out) / "manifest.json");
  note(g, "generate: " + std::to_string(a.samples) + " samples -> " + a.out);
  return kOk;
}

// --- validate -----------------------------------------------------------------

struct ValidateArgs {
  std::string ensemble, out, band = "0.9,1.1", svg;
  double tol = 1e-6;
  std::size_t max_iter = 100;
  double min_convergence = 0.99;
  bool require_full = false;
};

int do_validate(const Globals& g, const ValidateArgs& a) {
  const auto [lo, hi] = parse_pair(a.band, "--band");
  if (!(lo < hi)) throw UsageError("--band needs lo < hi");
  if (!(a.tol > 0)) throw UsageError("--tol must be > 0");
  const VoltageBand band{lo, hi};
  PfOptions pf;
  pf.tol = a.tol;
  pf.max_iter = a.max_iter;

  const auto loaded = read_ensemble(a.ensemble, g.jobs);
  const auto& samples = loaded.ensemble.samples;
  std::vector<PFResult> results(samples.size());
  parallel_for(samples.size(), g.jobs, [&](std::size_t k) {
    results[k] = solve_fbs(build_pf_network(samples[k], loaded.topology, 1.0, loaded.meta.topology_hash), pf);
  });
  const auto stats = summarize_voltages(results, band);
  const fs::path out = a.out.empty() ? fs::path(a.ensemble) : fs::path(a.out);
  write_file(out / "validation.csv", render_validation_csv(results, band));
  write_file(out / "voltage_histogram.csv", render_histogram_csv(stats));

  Manifest m;
  m.command = "validate";
  m.input((fs::path(a.ensemble) / "meta.json").string());
  m.args = {{"ensemble", a.ensemble}, {"tol", a.tol},         {"band", a.band},
            {"max_iter", a.max_iter}, {"min_convergence", a.min_convergence},
            {"require_full_convergence", a.require_full}};
  m.outputs = {"validation.csv", "voltage_histogram.csv"};
  if (!a.svg.empty()) {
    write_file(a.svg, render_histogram_svg(stats));
    m.outputs.push_back(a.svg);
  }
  m.write(out / "validation.manifest.json");

  note(g, "validate: convergence " + format_sig(100.0 * stats.convergence_rate, 5) + "%, in band " +
              format_sig(100.0 * stats.in_band_fraction, 5) + "%");
  if (a.require_full && stats.convergence_rate < 1.0) {
    std::cerr << "validate: not every sample converged\n";
    return kValidation;
  }
  if (stats.convergence_rate < a.min_convergence) {
    std::cerr << "validate: convergence below " << a.min_convergence << '\n';
    return kValidation;
  }
  return kOk;
}

// --- hostcap ------------------------------------------------------------------

struct HostcapArgs {
  std::string ensemble, profiles, irradiance, level = "bus", out, band = "0.9,1.1";
  double max_kw = 10000.0;
  double tol_kw = 1.0;
  double hdi = 0.94;
  bool full_horizon = false;
};

int do_hostcap(const Globals& g, const HostcapArgs& a) {
  Manifest m;
  m.command = "hostcap";
  SnapshotInputs snap;
  if (!a.profiles.empty()) {
    snap.load_multiplier = parse_profile_csv(read_file(a.profiles), "multiplier");
    m.input(a.profiles);
  } else {
    snap.load_multiplier = default_load_profile();
  }
  if (!a.irradiance.empty()) {
    snap.irradiance = parse_profile_csv(read_file(a.irradiance), "irradiance");
    m.input(a.irradiance);
  } else {
    snap.irradiance = default_irradiance_profile();
  }
  const auto [lo, hi] = parse_pair(a.band, "--band");
  HcOptions opt;
  opt.level = parse_hc_level(a.level);
  opt.band = {lo, hi};
  opt.search = {0.0, a.max_kw, a.tol_kw};
  opt.full_horizon = a.full_horizon;
  opt.hdi_mass = a.hdi;
  opt.jobs = g.jobs;

  const auto loaded = read_ensemble(a.ensemble, g.jobs);
  m.input((fs::path(a.ensemble) / "meta.json").string());
  const auto hc = ensemble_hosting_capacity(loaded.ensemble, loaded.topology, snap, opt);
  write_file(a.out, render_hc_csv(hc));
  const auto p = fs::path(a.out);
  const auto summary = (p.parent_path() / (p.stem().string() + "_summary.csv")).string();
  write_file(summary, render_hc_summary_csv(hc, a.hdi));

  m.args = {{"ensemble", a.ensemble}, {"profiles", a.profiles}, {"irradiance", a.irradiance},
            {"level", a.level},       {"band", a.band},         {"max_kw", a.max_kw},
            {"tol_kw", a.tol_kw},     {"hdi", a.hdi},           {"full_horizon", a.full_horizon}};
  m.outputs = {a.out, summary};
  m.write(file_manifest(a.out));
  note(g, "hostcap: " + std::to_string(hc.elements.size()) + " elements x " +
              std::to_string(loaded.ensemble.samples.size()) + " samples -> " + a.out);
  return kOk;
}

// --- export -------------------------------------------------------------------

struct ExportArgs {
  std::string sample, topo, format, out;
};

int do_export(const Globals& g, const ExportArgs& a) {
  const auto topo_path = a.topo.empty() ? (fs::path(a.sample).parent_path() / "topology.json").string() : a.topo;
  const auto topo = parse_topology(read_file(topo_path));
  const auto sample = parse_sample(read_file(a.sample), topo);
  if (sample.topology_hash != topology_hash(topo)) fail(Errc::HashMismatch, "sample was drawn on another topology");
  Manifest m;
  m.command = "export";
  m.input(a.sample);
  m.input(topo_path);
  m.args = {{"sample", a.sample}, {"topo", topo_path}, {"format", a.format}};
  const fs::path out(a.out);
  if (a.format == "opendss") {
    write_opendss(sample, topo, a.out);
    m.outputs = {"master.dss"};
  } else if (a.format == "tables") {
    write_grid_tables(sample, topo, (out / "grid_tables.json").string());
    m.outputs = {"grid_tables.json"};
  } else if (a.format == "geojson") {
    write_geojson(topo, &sample, (out / "network.geojson").string());
    m.outputs = {"network.geojson"};
  } else {
    throw UsageError("--format must be opendss, tables or geojson");
  }
  m.write(out / "manifest.json");
  note(g, "export: " + a.format + " -> " + a.out);
  return kOk;
}

// --- stats --------------------------------------------------------------------

struct StatsArgs {
  std::string ensemble, out;
  double hdi = 0.94;
};

int do_stats(const Globals& g, const StatsArgs& a) {
  if (!(a.hdi > 0 && a.hdi < 1)) throw UsageError("--hdi must lie in (0, 1)");
  const auto loaded = read_ensemble(a.ensemble, g.jobs);
  write_ensemble_stats(loaded.ensemble, loaded.topology, a.hdi, a.out);
  Manifest m;
  m.command = "stats";
  m.input((fs::path(a.ensemble) / "meta.json").string());
  m.args = {{"ensemble", a.ensemble}, {"hdi", a.hdi}};
  m.outputs = {a.out};
  m.write(file_manifest(a.out));
  note(g, "stats: " + a.out);
  return kOk;
}

int exit_for(Errc code) {
  switch (code) {
    case Errc::InvalidArgument:
    case Errc::InvalidPowerFactor:
      return kUsage;
    case Errc::BaseCaseViolation:
      return kValidation;
    default:
      return kData;
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Probabilistic synthetic distribution-grid generator", "gridsynth"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "INI file; one section per subcommand, flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "Suppress progress notes");

  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "Read or fetch an OSM extract");
  ingest->add_option("--input", ia.input, "Overpass JSON file");
  ingest->add_option("--query", ia.kind, "point, bbox, city or address");
  ingest->add_option("--center", ia.center, "LAT,LON for point queries");
  ingest->add_option("--dist", ia.dist_m, "Radius in meters");
  ingest->add_option("--bbox", ia.bbox, "south,west,north,east");
  ingest->add_option("--city", ia.city);
  ingest->add_option("--address", ia.address);
  ingest->add_option("--overpass-url", ia.overpass_url, "Endpoint (else GRIDSYNTH_OVERPASS_URL)");
  ingest->add_option("--geocoder-url", ia.geocoder_url, "Nominatim-style endpoint for city/address");
  ingest->add_option("--attempts", ia.attempts)->check(CLI::PositiveNumber);
  ingest->add_option("--backoff", ia.backoff_s)->check(CLI::NonNegativeNumber);
  ingest->add_option("--out", ia.out, "Extract cache file")->required();

  TopologyArgs ta;
  auto* topo = app.add_subcommand("topology", "Build a radial topology from an extract");
  topo->add_option("--extract", ta.extract)->required();
  topo->add_option("--out", ta.out)->required();
  topo->add_option("--geojson", ta.geojson);
  topo->add_option("--name", ta.name);
  topo->add_option("--zones", ta.zones);
  topo->add_option("--mv-kv", ta.mv_kv);
  topo->add_option("--lv-kv", ta.lv_kv);
  topo->add_option("--max-cluster", ta.max_cluster);
  topo->add_option("--distance", ta.distance, "topological or euclidean");
  topo->add_option("--inject-substation", ta.inject, "LAT,LON (repeatable)")->delimiter(';');

  LearnArgs la;
  auto* learn = app.add_subcommand("learn", "Fit the four posteriors");
  learn->add_option("--bus-records", la.bus_records);
  learn->add_option("--line-records", la.line_records);
  learn->add_option("--prior", la.prior, "Priors JSON");
  learn->add_option("--zones", la.zones);
  learn->add_option("--steps", la.steps);
  learn->add_option("--burn-in", la.burn_in);
  learn->add_option("--thin", la.thin);
  learn->add_option("--draws", la.draws);
  learn->add_flag("--emit-defaults", la.emit_defaults, "Write the shipped default posteriors");
  learn->add_option("--out", la.out, "Posterior directory")->required();

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Sample an ensemble");
  gen->add_option("--topo", ga.topo)->required();
  gen->add_option("--params-dir", ga.params_dir, "Posterior directory or 'default'");
  gen->add_option("--samples", ga.samples);
  gen->add_option("--pf", ga.pf);
  gen->add_option("--out", ga.out, "Ensemble directory")->required();

  ValidateArgs va;
  auto* val = app.add_subcommand("validate", "Power-flow check of an ensemble");
  val->add_option("--ensemble", va.ensemble)->required();
  val->add_option("--out", va.out, "Output directory (default: the ensemble)");
  val->add_option("--tol", va.tol);
  val->add_option("--band", va.band, "lo,hi in p.u.");
  val->add_option("--max-iter", va.max_iter);
  val->add_option("--min-convergence", va.min_convergence);
  val->add_option("--svg", va.svg, "Histogram SVG path");
  val->add_flag("--require-full-convergence", va.require_full);

  HostcapArgs ha;
  auto* hcap = app.add_subcommand("hostcap", "PV hosting capacity");
  hcap->add_option("--ensemble", ha.ensemble)->required();
  hcap->add_option("--profiles", ha.profiles, "hour,multiplier CSV");
  hcap->add_option("--irradiance", ha.irradiance, "hour,irradiance CSV");
  hcap->add_option("--level", ha.level, "bus, transformer or system");
  hcap->add_option("--band", ha.band);
  hcap->add_option("--max-kw", ha.max_kw);
  hcap->add_option("--tol-kw", ha.tol_kw);
  hcap->add_option("--hdi", ha.hdi);
  hcap->add_flag("--full-horizon", ha.full_horizon);
  hcap->add_option("--out", ha.out)->required();

  ExportArgs ea;
  auto* exp = app.add_subcommand("export", "Write one sample for external simulators");
  exp->add_option("--sample", ea.sample)->required();
  exp->add_option("--topo", ea.topo, "Topology (default: next to the sample)");
  exp->add_option("--format", ea.format)->required();
  exp->add_option("--out", ea.out)->required();

  StatsArgs sa;
  auto* st = app.add_subcommand("stats", "Ensemble summary with HDIs");
  st->add_option("--ensemble", sa.ensemble)->required();
  st->add_option("--hdi", sa.hdi);
  st->add_option("--out", sa.out)->required();

  for (auto* sub : app.get_subcommands({})) sub->allow_config_extras(CLI::config_extras_mode::error);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    std::cout << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*ingest) return do_ingest(g, ia);
    if (*topo) return do_topology(g, ta);
    if (*learn) return do_learn(g, la);
    if (*gen) return do_generate(g, ga);
    if (*val) return do_validate(g, va);
    if (*hcap) return do_hostcap(g, ha);
    if (*exp) return do_export(g, ea);
    if (*st) return do_stats(g, sa);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace gridsynth::cli
