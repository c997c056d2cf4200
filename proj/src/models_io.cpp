#include <nlohmann/json.hpp>

#include "gridsynth/error.hpp"
#include "gridsynth/util.hpp"
#include "models_internal.hpp"

namespace gridsynth {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

template <class T>
T get(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(Errc::SchemaMismatch, std::string("posterior field '") + key + "' missing");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    fail(Errc::SchemaMismatch, std::string("posterior field '") + key + "': " + e.what());
  }
}

json header(ModelKind kind, int zones, std::size_t draws) {
  json doc;
  doc["format"] = "gridsynth-posterior";
  doc["version"] = kFormatVersion;
  doc["kind"] = std::string(to_string(kind));
  doc["zones"] = zones;
  doc["draws"] = draws;
  return doc;
}

json gamma_json(const std::array<GammaComponent, kMixtureComponents>& g) {
  json out = json::array();
  for (const auto& c : g) out.push_back({{"shape", c.shape}, {"rate", c.rate}});
  return out;
}

std::array<GammaComponent, kMixtureComponents> gamma_from(const json& j) {
  if (!j.is_array() || j.size() != kMixtureComponents) fail(Errc::SchemaMismatch, "expected three Gamma components");
  std::array<GammaComponent, kMixtureComponents> g{};
  for (std::size_t k = 0; k < kMixtureComponents; ++k) g[k] = {get<double>(j[k], "shape"), get<double>(j[k], "rate")};
  return g;
}

struct Serializer {
  json operator()(const PowerPosterior& p) const {
    auto doc = header(ModelKind::power, p.zones, p.draws.size());
    json order = json::array();
    for (auto ph : kAllPhases) order.push_back(std::string(to_string(ph)));
    doc["category_order"] = order;
    doc["concentration"] = p.concentration;
    json draws = json::array();
    for (const auto& d : p.draws) draws.push_back({{"c", d.c}, {"p_pot_kw", d.p_pot}, {"sigma_p_kw", d.sigma_p}});
    doc["values"] = std::move(draws);
    return doc;
  }
  json operator()(const ImpedancePosterior& p) const {
    auto doc = header(ModelKind::impedance, p.zones, p.draws.size());
    doc["gamma_r_per_km"] = gamma_json(p.gamma_r);
    doc["gamma_rho"] = gamma_json(p.gamma_rho);
    doc["concentration_r"] = p.concentration_r;
    doc["concentration_rho"] = p.concentration_rho;
    json draws = json::array();
    for (const auto& d : p.draws) draws.push_back({{"w_r", d.w_r}, {"w_rho", d.w_rho}});
    doc["values"] = std::move(draws);
    return doc;
  }
  json operator()(const FrequencyPosterior& p) const {
    auto doc = header(ModelKind::frequency, p.zones, p.draws.size());
    json draws = json::array();
    for (const auto& d : p.draws) draws.push_back({{"mu", d.mu}, {"alpha", d.alpha}});
    doc["values"] = std::move(draws);
    return doc;
  }
  json operator()(const DurationPosterior& p) const {
    auto doc = header(ModelKind::duration, p.zones, p.draws.size());
    doc["beta"] = p.beta;
    json draws = json::array();
    for (const auto& d : p.draws) {
      json w = json::array();
      for (const auto& wb : d.weibull) w.push_back({wb.shape, wb.scale});
      draws.push_back({{"p", d.p}, {"weibull", std::move(w)}});
    }
    doc["values"] = std::move(draws);
    return doc;
  }
};

ModelKind parse_kind(const std::string& s) {
  for (auto k : {ModelKind::power, ModelKind::impedance, ModelKind::frequency, ModelKind::duration}) {
    if (to_string(k) == s) return k;
  }
  fail(Errc::SchemaMismatch, "unknown model kind '" + s + "'");
}

}  // namespace

std::string serialize_posterior(const AnyPosterior& posterior) {
  std::visit([](const auto& p) { validate(p); }, posterior);
  return std::visit(Serializer{}, posterior).dump(1) + "\n";
}

AnyPosterior parse_posterior(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::SchemaMismatch, std::string("posterior is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "gridsynth-posterior") {
    fail(Errc::SchemaMismatch, "not a posterior document");
  }
  if (get<int>(doc, "version") != kFormatVersion) fail(Errc::SchemaMismatch, "unsupported posterior version");
  const auto kind = parse_kind(get<std::string>(doc, "kind"));
  const int zones = get<int>(doc, "zones");
  const auto declared = get<std::size_t>(doc, "draws");
  const auto values = get<json>(doc, "values");
  if (!values.is_array() || values.size() != declared) fail(Errc::SchemaMismatch, "draw count does not match header");

  AnyPosterior out;
  switch (kind) {
    case ModelKind::power: {
      PowerPosterior p;
      p.zones = zones;
      p.concentration = get<std::vector<Simplex7>>(doc, "concentration");
      for (const auto& v : values) {
        p.draws.push_back({get<std::vector<Simplex7>>(v, "c"), get<std::vector<std::array<double, 3>>>(v, "p_pot_kw"),
                           get<double>(v, "sigma_p_kw")});
      }
      validate(p);
      out = std::move(p);
      break;
    }
    case ModelKind::impedance: {
      ImpedancePosterior p;
      p.zones = zones;
      p.gamma_r = gamma_from(get<json>(doc, "gamma_r_per_km"));
      p.gamma_rho = gamma_from(get<json>(doc, "gamma_rho"));
      p.concentration_r = get<std::vector<MixWeights>>(doc, "concentration_r");
      p.concentration_rho = get<std::vector<MixWeights>>(doc, "concentration_rho");
      for (const auto& v : values) {
        p.draws.push_back({get<std::vector<MixWeights>>(v, "w_r"), get<std::vector<MixWeights>>(v, "w_rho")});
      }
      validate(p);
      out = std::move(p);
      break;
    }
    case ModelKind::frequency: {
      FrequencyPosterior p;
      p.zones = zones;
      for (const auto& v : values) p.draws.push_back({get<std::vector<double>>(v, "mu"), get<double>(v, "alpha")});
      validate(p);
      out = std::move(p);
      break;
    }
    case ModelKind::duration: {
      DurationPosterior p;
      p.zones = zones;
      p.beta = get<std::vector<std::array<double, 2>>>(doc, "beta");
      for (const auto& v : values) {
        DurationDraw d;
        d.p = get<std::vector<double>>(v, "p");
        for (const auto& w : get<std::vector<std::array<double, 2>>>(v, "weibull")) d.weibull.push_back({w[0], w[1]});
        p.draws.push_back(std::move(d));
      }
      validate(p);
      out = std::move(p);
      break;
    }
  }
  return out;
}

void save_posterior(const AnyPosterior& posterior, const std::string& path) {
  write_file(path, serialize_posterior(posterior));
}

AnyPosterior load_posterior(const std::string& source, ModelKind kind, int default_zones) {
  if (source == "default") {
    switch (kind) {
      case ModelKind::power: return default_power_posterior(default_zones);
      case ModelKind::impedance: return default_impedance_posterior(default_zones);
      case ModelKind::frequency: return default_frequency_posterior(default_zones);
      case ModelKind::duration: return default_duration_posterior(default_zones);
    }
  }
  auto post = parse_posterior(read_file(source));
  if (kind_of(post) != kind) {
    fail(Errc::ModelKindMismatch, source + " holds a " + std::string(to_string(kind_of(post))) + " posterior, expected " +
                                      std::string(to_string(kind)));
  }
  return post;
}

ModelKind kind_of(const AnyPosterior& posterior) noexcept { return static_cast<ModelKind>(posterior.index()); }

int zones_of(const AnyPosterior& posterior) noexcept {
  return std::visit([](const auto& p) { return p.zones; }, posterior);
}

std::size_t draw_count(const AnyPosterior& posterior) noexcept {
  return std::visit([](const auto& p) { return p.draws.size(); }, posterior);
}

std::string posterior_file_name(ModelKind kind) { return std::string(to_string(kind)) + ".json"; }

}  // namespace gridsynth
