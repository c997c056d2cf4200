#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "gridsynth/error.hpp"
#include "gridsynth/models.hpp"
#include "gridsynth/topology.hpp"
#include "gridsynth/util.hpp"

namespace gridsynth {

namespace {

/// Header-addressed CSV table. Cells are trimmed; quoting is not supported
/// because no field in the record schemas needs it.
struct CsvTable {
  std::map<std::string, std::size_t, std::less<>> column;
  std::vector<std::vector<std::string_view>> rows;
  std::vector<std::size_t> line_no;

  std::string_view cell(std::size_t row, std::string_view name) const {
    auto it = column.find(name);
    if (it == column.end() || it->second >= rows[row].size()) return {};
    return rows[row][it->second];
  }
};

CsvTable read_csv(std::string_view text, std::span<const std::string_view> required) {
  CsvTable t;
  std::size_t n = 0;
  bool header = true;
  for (auto line : split(text, '\n')) {
    ++n;
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split(line, ',');
    for (auto& c : cells) c = trim(c);
    if (header) {
      for (std::size_t i = 0; i < cells.size(); ++i) t.column.emplace(std::string(cells[i]), i);
      header = false;
      continue;
    }
    if (cells.size() != t.column.size()) {
      fail(Errc::SchemaMismatch, "line " + std::to_string(n) + ": expected " + std::to_string(t.column.size()) +
                                     " cells, found " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_no.push_back(n);
  }
  if (header) fail(Errc::EmptyDataset, "CSV has no header");
  for (auto name : required) {
    if (!t.column.contains(name)) fail(Errc::SchemaMismatch, "missing column '" + std::string(name) + "'");
  }
  return t;
}

double number(std::string_view cell, std::size_t line, std::string_view col) {
  bool ok = false;
  const double v = parse_double(cell, &ok);
  if (!ok || !std::isfinite(v)) {
    fail(Errc::SchemaMismatch,
         "line " + std::to_string(line) + ": column " + std::string(col) + " is not a number: '" + std::string(cell) + "'");
  }
  return v;
}

std::optional<double> maybe_number(std::string_view cell, std::size_t line, std::string_view col) {
  if (cell.empty()) return std::nullopt;
  return number(cell, line, col);
}

std::optional<int> maybe_zone(std::string_view cell, std::size_t line) {
  if (cell.empty()) return std::nullopt;
  const double v = number(cell, line, "hop_zone");
  if (v < 0 || v != std::floor(v)) fail(Errc::SchemaMismatch, "line " + std::to_string(line) + ": bad hop_zone");
  return static_cast<int>(v);
}

std::string render_opt(const std::optional<double>& v) { return v ? format_sig(*v, 17) : std::string(); }
std::string render_opt(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

constexpr std::string_view kBusColumns[] = {"bus_id",   "distance_km",           "hop_zone",
                                            "phase",    "p_kw_a",                "p_kw_b",
                                            "p_kw_c",   "interruptions_per_year", "interruption_durations_h",
                                            "building_scale"};
constexpr std::string_view kLineColumns[] = {"line_id", "from_bus", "to_bus",      "length_km",
                                             "r1_ohm",  "x1_ohm",   "distance_km", "hop_zone"};

}  // namespace

std::vector<BusRecord> parse_bus_records(std::string_view csv) {
  constexpr std::string_view required[] = {"bus_id", "phase", "p_kw_a", "p_kw_b", "p_kw_c"};
  const auto t = read_csv(csv, required);
  if (!t.column.contains("distance_km") && !t.column.contains("hop_zone")) {
    fail(Errc::SchemaMismatch, "bus records need distance_km or hop_zone");
  }
  std::vector<BusRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto ln = t.line_no[r];
    BusRecord rec;
    rec.bus_id = std::string(t.cell(r, "bus_id"));
    rec.distance_km = maybe_number(t.cell(r, "distance_km"), ln, "distance_km");
    rec.hop_zone = maybe_zone(t.cell(r, "hop_zone"), ln);
    if (!rec.distance_km && !rec.hop_zone) {
      fail(Errc::SchemaMismatch, "line " + std::to_string(ln) + ": neither distance_km nor hop_zone given");
    }
    rec.phase = parse_phase(t.cell(r, "phase"));
    const char* cols[] = {"p_kw_a", "p_kw_b", "p_kw_c"};
    for (int k = 0; k < 3; ++k) {
      rec.p_kw[k] = number(t.cell(r, cols[k]), ln, cols[k]);
      if (rec.p_kw[k] < 0) fail(Errc::SchemaMismatch, "line " + std::to_string(ln) + ": negative power");
      if (!has_conductor(rec.phase, k) && rec.p_kw[k] != 0.0) {
        fail(Errc::SchemaMismatch, "line " + std::to_string(ln) + ": power on an inactive phase");
      }
    }
    if (auto c = t.cell(r, "interruptions_per_year"); !c.empty()) {
      const double v = number(c, ln, "interruptions_per_year");
      if (v < 0 || v != std::floor(v)) fail(Errc::SchemaMismatch, "line " + std::to_string(ln) + ": bad count");
      rec.interruptions_per_year = static_cast<long>(v);
    }
    if (auto c = t.cell(r, "interruption_durations_h"); !c.empty()) {
      for (auto part : split(c, ';')) {
        part = trim(part);
        if (part.empty()) continue;
        const double d = number(part, ln, "interruption_durations_h");
        if (!(d > 0)) fail(Errc::SchemaMismatch, "line " + std::to_string(ln) + ": durations must be positive");
        rec.interruption_durations_h.push_back(d);
      }
    }
    if (auto c = t.cell(r, "building_scale"); !c.empty()) {
      rec.building_scale = number(c, ln, "building_scale");
      if (!(rec.building_scale > 0)) fail(Errc::SchemaMismatch, "line " + std::to_string(ln) + ": building_scale <= 0");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::string render_bus_records(std::span<const BusRecord> records) {
  std::string out;
  for (std::size_t i = 0; i < std::size(kBusColumns); ++i) {
    if (i) out += ',';
    out += kBusColumns[i];
  }
  out += '\n';
  for (const auto& r : records) {
    out += r.bus_id + ',' + render_opt(r.distance_km) + ',' + render_opt(r.hop_zone) + ',';
    out += std::string(to_string(r.phase));
    for (double p : r.p_kw) out += ',' + format_sig(p, 17);
    out += ',' + std::to_string(r.interruptions_per_year) + ',';
    for (std::size_t i = 0; i < r.interruption_durations_h.size(); ++i) {
      if (i) out += ';';
      out += format_sig(r.interruption_durations_h[i], 17);
    }
    out += ',' + format_sig(r.building_scale, 17) + '\n';
  }
  return out;
}

std::vector<LineRecord> parse_line_records(std::string_view csv) {
  constexpr std::string_view required[] = {"line_id", "length_km", "r1_ohm", "x1_ohm"};
  const auto t = read_csv(csv, required);
  if (!t.column.contains("distance_km") && !t.column.contains("hop_zone")) {
    fail(Errc::SchemaMismatch, "line records need distance_km or hop_zone");
  }
  std::vector<LineRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto ln = t.line_no[r];
    LineRecord rec;
    rec.line_id = std::string(t.cell(r, "line_id"));
    rec.from_bus = std::string(t.cell(r, "from_bus"));
    rec.to_bus = std::string(t.cell(r, "to_bus"));
    rec.length_km = number(t.cell(r, "length_km"), ln, "length_km");
    rec.r1_ohm = number(t.cell(r, "r1_ohm"), ln, "r1_ohm");
    rec.x1_ohm = number(t.cell(r, "x1_ohm"), ln, "x1_ohm");
    rec.distance_km = maybe_number(t.cell(r, "distance_km"), ln, "distance_km");
    rec.hop_zone = maybe_zone(t.cell(r, "hop_zone"), ln);
    if (!(rec.length_km > 0)) fail(Errc::SchemaMismatch, "line " + std::to_string(ln) + ": length_km must be > 0");
    if (rec.r1_ohm < 0 || rec.x1_ohm < 0 || !(rec.r1_ohm + rec.x1_ohm > 0)) {
      fail(Errc::SchemaMismatch, "line " + std::to_string(ln) + ": impedance must be non-negative and non-zero");
    }
    if (!rec.distance_km && !rec.hop_zone) {
      fail(Errc::SchemaMismatch, "line " + std::to_string(ln) + ": neither distance_km nor hop_zone given");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::string render_line_records(std::span<const LineRecord> records) {
  std::string out;
  for (std::size_t i = 0; i < std::size(kLineColumns); ++i) {
    if (i) out += ',';
    out += kLineColumns[i];
  }
  out += '\n';
  for (const auto& r : records) {
    out += r.line_id + ',' + r.from_bus + ',' + r.to_bus + ',' + format_sig(r.length_km, 17) + ',' +
           format_sig(r.r1_ohm, 17) + ',' + format_sig(r.x1_ohm, 17) + ',' + render_opt(r.distance_km) + ',' +
           render_opt(r.hop_zone) + '\n';
  }
  return out;
}

std::vector<int> training_zones(std::span<const std::optional<int>> hop_zone,
                                std::span<const std::optional<double>> distance_km, int zones) {
  if (zones < 1) fail(Errc::InvalidArgument, "zone count must be at least 1");
  double d_max = 0.0;
  for (const auto& d : distance_km) {
    if (d) d_max = std::max(d_max, *d);
  }
  std::vector<int> out(hop_zone.size(), 1);
  for (std::size_t i = 0; i < hop_zone.size(); ++i) {
    if (hop_zone[i]) {
      const int z = std::max(1, *hop_zone[i]);
      if (z > zones) {
        fail(Errc::ZoneCountMismatch, "record zone " + std::to_string(z) + " exceeds Z = " + std::to_string(zones));
      }
      out[i] = z;
    } else if (distance_km[i]) {
      out[i] = zone_of(*distance_km[i], d_max, zones);
    }
  }
  return out;
}

std::vector<int> training_zones(std::span<const BusRecord> records, int zones) {
  std::vector<std::optional<int>> hz;
  std::vector<std::optional<double>> d;
  for (const auto& r : records) {
    hz.push_back(r.hop_zone);
    d.push_back(r.distance_km);
  }
  return training_zones(hz, d, zones);
}

std::vector<int> training_zones(std::span<const LineRecord> records, int zones) {
  std::vector<std::optional<int>> hz;
  std::vector<std::optional<double>> d;
  for (const auto& r : records) {
    hz.push_back(r.hop_zone);
    d.push_back(r.distance_km);
  }
  return training_zones(hz, d, zones);
}

double WeibullParams::mean() const { return scale * std::tgamma(1.0 + 1.0 / shape); }

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::power: return "power";
    case ModelKind::impedance: return "impedance";
    case ModelKind::frequency: return "frequency";
    case ModelKind::duration: return "duration";
  }
  return "power";
}

Priors parse_priors(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::SchemaMismatch, std::string("priors: ") + e.what());
  }
  if (!doc.is_object()) fail(Errc::SchemaMismatch, "priors must be a JSON object");
  Priors p;
  const std::map<std::string, double*> reals = {
      {"dirichlet", &p.dirichlet},
      {"power_log_sd", &p.power_log_sd},
      {"sigma_log_sd", &p.sigma_log_sd},
      {"sigma_floor_kw", &p.sigma_floor_kw},
      {"mixture_concentration", &p.mixture_concentration},
      {"freq_log_mu_mean", &p.freq_log_mu_mean},
      {"freq_log_mu_sd", &p.freq_log_mu_sd},
      {"freq_log_alpha_mean", &p.freq_log_alpha_mean},
      {"freq_log_alpha_sd", &p.freq_log_alpha_sd},
      {"beta_a", &p.beta_a},
      {"beta_b", &p.beta_b},
      {"weibull_log_shape_mean", &p.weibull_log_shape_mean},
      {"weibull_log_shape_sd", &p.weibull_log_shape_sd},
      {"weibull_log_scale_mean", &p.weibull_log_scale_mean},
      {"weibull_log_scale_sd", &p.weibull_log_scale_sd},
      {"default_weibull_shape", &p.default_weibull.shape},
      {"default_weibull_scale", &p.default_weibull.scale},
      {"em_tol", &p.em_tol},
  };
  const std::map<std::string, int*> ints = {{"em_restarts", &p.em_restarts}, {"em_max_iter", &p.em_max_iter}};
  for (const auto& [key, value] : doc.items()) {
    if (auto it = reals.find(key); it != reals.end() && value.is_number()) {
      *it->second = value.get<double>();
    } else if (auto jt = ints.find(key); jt != ints.end() && value.is_number_integer()) {
      *jt->second = value.get<int>();
    } else {
      fail(Errc::SchemaMismatch, "unknown or mistyped prior '" + key + "'");
    }
  }
  if (!(p.dirichlet > 0 && p.beta_a > 0 && p.beta_b > 0 && p.mixture_concentration > 0)) {
    fail(Errc::SchemaMismatch, "conjugate prior parameters must be positive");
  }
  if (!(p.power_log_sd > 0 && p.sigma_log_sd > 0 && p.freq_log_mu_sd > 0 && p.freq_log_alpha_sd > 0 &&
        p.weibull_log_shape_sd > 0 && p.weibull_log_scale_sd > 0)) {
    fail(Errc::SchemaMismatch, "prior scales must be positive");
  }
  if (p.em_restarts < 1 || p.em_max_iter < 1 || !(p.em_tol > 0)) fail(Errc::SchemaMismatch, "bad EM settings");
  if (!(p.sigma_floor_kw >= 0)) fail(Errc::SchemaMismatch, "sigma floor must be >= 0");
  return p;
}

}  // namespace gridsynth
