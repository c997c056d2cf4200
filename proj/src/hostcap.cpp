#include "gridsynth/hostcap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <tuple>

#include "gridsynth/error.hpp"
#include "gridsynth/mcmc.hpp"
#include "gridsynth/util.hpp"

namespace gridsynth {

void SnapshotInputs::validate() const {
  if (load_multiplier.empty() || load_multiplier.size() != irradiance.size()) {
    fail(Errc::InvalidArgument, "load and irradiance profiles must be non-empty and equally long");
  }
  if (load_multiplier.size() != 24 && load_multiplier.size() != 8760) {
    fail(Errc::InvalidArgument, "profiles must have 24 or 8760 hourly values");
  }
  for (double m : load_multiplier) {
    if (!(m >= 0) || !std::isfinite(m)) fail(Errc::InvalidArgument, "load multipliers must be >= 0");
  }
  for (double g : irradiance) {
    if (!(g >= 0 && g <= 1)) fail(Errc::InvalidArgument, "irradiance must lie in [0, 1]");
  }
}

std::size_t SnapshotInputs::worst_hour() const {
  validate();
  std::size_t best = 0;
  for (std::size_t h = 1; h < irradiance.size(); ++h) {
    if (irradiance[h] - load_multiplier[h] > irradiance[best] - load_multiplier[best]) best = h;
  }
  return best;
}

std::vector<double> default_load_profile() {
  // Residential shape: night trough, midday dip, evening peak at 19 h.
  return {0.45, 0.40, 0.37, 0.35, 0.36, 0.42, 0.55, 0.65, 0.62, 0.55, 0.50, 0.48,
          0.47, 0.46, 0.48, 0.55, 0.68, 0.85, 0.97, 1.00, 0.92, 0.78, 0.62, 0.52};
}

std::vector<double> default_irradiance_profile() {
  // Clear-sky bell between 6 h and 18 h.
  std::vector<double> g(24, 0.0);
  for (int h = 6; h <= 18; ++h) g[static_cast<std::size_t>(h)] = std::sin(std::numbers::pi * (h - 6) / 12.0);
  for (auto& v : g) v = std::round(v * 1e4) / 1e4;
  return g;
}

std::vector<double> parse_profile_csv(std::string_view text, std::string_view column) {
  std::vector<double> out;
  bool header = true;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 2) fail(Errc::SchemaMismatch, "profile line " + std::to_string(line_no) + ": expected 2 cells");
    if (header) {
      if (trim(cells[0]) != "hour" || trim(cells[1]) != column) {
        fail(Errc::SchemaMismatch, "profile header must be 'hour," + std::string(column) + "'");
      }
      header = false;
      continue;
    }
    bool ok = false;
    const double hour = parse_double(trim(cells[0]), &ok);
    const double v = ok ? parse_double(trim(cells[1]), &ok) : 0.0;
    if (!ok || hour != static_cast<double>(out.size())) {
      fail(Errc::SchemaMismatch, "profile line " + std::to_string(line_no) + ": bad or out-of-order value");
    }
    out.push_back(v);
  }
  return out;
}

ThreePhaseNetwork scale_loads(const ThreePhaseNetwork& net, double multiplier) {
  ThreePhaseNetwork out = net;
  for (auto& inj : out.injection) {
    for (auto& s : inj) s *= multiplier;
  }
  return out;
}

namespace {

bool feasible_result(const PFResult& r, VoltageBand band) {
  if (!r.converged) return false;
  for (std::size_t b = 0; b < r.voltage.size(); ++b) {
    for (int c = 0; c < 3; ++c) {
      if (((r.mask[b] >> c) & 1u) && !(std::abs(r.voltage[b][c]) <= band.hi)) return false;
    }
  }
  return true;
}

/// Adds `pv_kw` of real power spread over `buses` onto a copy of `net`.
ThreePhaseNetwork with_pv(const ThreePhaseNetwork& net, std::span<const std::size_t> buses, double pv_kw) {
  ThreePhaseNetwork out = net;
  const double s_phase_kva = net.s_base_mva * 1000.0 / 3.0;
  const double per_bus = pv_kw / static_cast<double>(buses.size());
  for (auto b : buses) {
    const auto m = net.mask[b];
    const int k = ((m & 1) != 0) + ((m & 2) != 0) + ((m & 4) != 0);
    if (k == 0) continue;
    for (int c = 0; c < 3; ++c) {
      if ((m >> c) & 1u) out.injection[b][c] += cplx(per_bus / k / s_phase_kva, 0.0);
    }
  }
  return out;
}

}  // namespace

bool pv_feasible(const ThreePhaseNetwork& net, std::span<const std::size_t> buses, double pv_kw, double irradiance,
                 VoltageBand band, const PfOptions& pf) {
  return feasible_result(solve_fbs(with_pv(net, buses, pv_kw * irradiance), pf), band);
}

double injection_hosting_capacity(const ThreePhaseNetwork& net, std::span<const std::size_t> buses, double irradiance,
                                  VoltageBand band, const HcSearch& search, const PfOptions& pf) {
  if (buses.empty()) fail(Errc::InvalidArgument, "no buses to host PV");
  if (!(search.hi_kw > search.lo_kw) || !(search.tol_kw > 0)) fail(Errc::InvalidArgument, "bad search bracket");
  const auto base = solve_fbs(net, pf);
  if (!base.converged || !in_band(base, band)) {
    fail(Errc::BaseCaseViolation, "network violates the voltage band before any PV is added");
  }
  double lo = search.lo_kw;
  double hi = search.hi_kw;
  if (pv_feasible(net, buses, hi, irradiance, band, pf)) return hi;
  if (!pv_feasible(net, buses, lo, irradiance, band, pf)) return lo;
  while (hi - lo > search.tol_kw) {
    const double mid = 0.5 * (lo + hi);
    if (pv_feasible(net, buses, mid, irradiance, band, pf)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double bus_hosting_capacity(const ThreePhaseNetwork& net, std::size_t bus, const SnapshotInputs& snapshot,
                            VoltageBand band, const HcSearch& search, const PfOptions& pf, bool full_horizon) {
  if (bus >= net.size()) fail(Errc::InvalidArgument, "bus index out of range");
  const std::size_t buses[] = {bus};
  if (!full_horizon) {
    const auto h = snapshot.worst_hour();
    return injection_hosting_capacity(scale_loads(net, snapshot.load_multiplier[h]), buses, snapshot.irradiance[h],
                                      band, search, pf);
  }
  snapshot.validate();
  double best = search.hi_kw;
  for (std::size_t h = 0; h < snapshot.irradiance.size(); ++h) {
    if (snapshot.irradiance[h] <= 0) continue;
    best = std::min(best, injection_hosting_capacity(scale_loads(net, snapshot.load_multiplier[h]), buses,
                                                     snapshot.irradiance[h], band, search, pf));
  }
  return best;
}

HcLevel parse_hc_level(std::string_view text) {
  if (text == "bus") return HcLevel::bus;
  if (text == "transformer") return HcLevel::transformer;
  if (text == "system") return HcLevel::system;
  fail(Errc::InvalidArgument, "unknown hosting-capacity level '" + std::string(text) + "'");
}

std::string_view to_string(HcLevel level) noexcept {
  switch (level) {
    case HcLevel::bus: return "bus";
    case HcLevel::transformer: return "transformer";
    case HcLevel::system: return "system";
  }
  return "bus";
}

std::vector<HcDistributions::Summary> HcDistributions::summarize(double hdi_mass) const {
  std::vector<Summary> out;
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const auto& v = values[e];
    Summary s;
    s.element = elements[e];
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() >= 2) {
      std::tie(s.hdi_lo, s.hdi_hi) = compute_hdi(v, hdi_mass);
    } else {
      s.hdi_lo = s.hdi_hi = v.front();
    }
    out.push_back(std::move(s));
  }
  return out;
}

HcDistributions ensemble_hosting_capacity(const Ensemble& ensemble, const GridTopology& topo,
                                          const SnapshotInputs& snapshot, const HcOptions& options) {
  if (ensemble.samples.empty()) fail(Errc::EmptyEnsemble, "ensemble has no samples");
  snapshot.validate();

  HcDistributions hc;
  hc.level = options.level;
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> load_buses;
  for (std::size_t b = 0; b < topo.buses.size(); ++b) {
    if (topo.buses[b].load_point) load_buses.push_back(b);
  }
  switch (options.level) {
    case HcLevel::bus:
      for (auto b : load_buses) {
        hc.elements.push_back(topo.buses[b].id);
        groups.push_back({b});
      }
      break;
    case HcLevel::transformer: {
      const auto tree = index_tree(topo);
      for (const auto& t : topo.transformers) {
        std::vector<std::size_t> members;
        // Every load bus below the transformer's LV side.
        std::vector<std::size_t> stack{t.lv_bus};
        while (!stack.empty()) {
          const auto b = stack.back();
          stack.pop_back();
          if (topo.buses[b].load_point) members.push_back(b);
          for (auto c : tree.children[b]) stack.push_back(c);
        }
        if (members.empty()) continue;
        std::sort(members.begin(), members.end());
        hc.elements.push_back(t.id);
        groups.push_back(std::move(members));
      }
      break;
    }
    case HcLevel::system:
      hc.elements.push_back("system");
      groups.push_back(load_buses);
      break;
  }
  hc.values.assign(groups.size(), std::vector<double>(ensemble.samples.size(), 0.0));

  const auto hash = topology_hash(topo);
  const auto worst = snapshot.worst_hour();
  parallel_for(ensemble.samples.size(), options.jobs, [&](std::size_t k) {
    const auto net = build_pf_network(ensemble.samples[k], topo, options.s_base_mva, hash);
    std::vector<std::size_t> hours;
    if (options.full_horizon) {
      for (std::size_t h = 0; h < snapshot.irradiance.size(); ++h) {
        if (snapshot.irradiance[h] > 0) hours.push_back(h);
      }
    } else {
      hours.push_back(worst);
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
      double best = options.search.hi_kw;
      for (auto h : hours) {
        const auto scaled = scale_loads(net, snapshot.load_multiplier[h]);
        best = std::min(best, injection_hosting_capacity(scaled, groups[g], snapshot.irradiance[h], options.band,
                                                         options.search, options.pf));
      }
      hc.values[g][k] = best;
    }
  });
  return hc;
}

std::string render_hc_csv(const HcDistributions& hc) {
  std::string out = "element,sample_idx,hc_kw\n";
  for (std::size_t e = 0; e < hc.elements.size(); ++e) {
    for (std::size_t k = 0; k < hc.values[e].size(); ++k) {
      out += hc.elements[e] + ',' + std::to_string(k) + ',' + format_sig(hc.values[e][k], 8) + '\n';
    }
  }
  return out;
}

std::string render_hc_summary_csv(const HcDistributions& hc, double hdi_mass) {
  std::string out = "element,mean_kw,hdi_lo_kw,hdi_hi_kw\n";
  for (const auto& s : hc.summarize(hdi_mass)) {
    out += s.element + ',' + format_sig(s.mean, 8) + ',' + format_sig(s.hdi_lo, 8) + ',' + format_sig(s.hdi_hi, 8) + '\n';
  }
  return out;
}

}  // namespace gridsynth
