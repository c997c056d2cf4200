#include <numeric>

#include "gridsynth/error.hpp"
#include "gridsynth/gridio.hpp"
#include "gridsynth/mcmc.hpp"
#include "gridsynth/util.hpp"

namespace gridsynth {

namespace {

StatRow summarize(std::string metric, const std::vector<double>& v, double mass) {
  StatRow row;
  row.metric = std::move(metric);
  row.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() >= 2) {
    std::tie(row.hdi_lo, row.hdi_hi) = compute_hdi(v, mass);
  } else {
    row.hdi_lo = row.hdi_hi = v.front();
  }
  return row;
}

}  // namespace

std::vector<StatRow> ensemble_stats(const Ensemble& ensemble, const GridTopology& topo, double hdi_mass) {
  if (ensemble.samples.empty()) fail(Errc::EmptyEnsemble, "ensemble has no samples");
  if (!(hdi_mass > 0 && hdi_mass < 1)) fail(Errc::InvalidArgument, "HDI mass must lie in (0, 1)");
  const std::size_t n = ensemble.samples.size();
  std::vector<std::vector<double>> share(kPhaseCategories, std::vector<double>(n, 0.0));
  std::vector<double> demand(n), r(n), x(n), rx(n), caifi(n), caidi(n);

  for (std::size_t s = 0; s < n; ++s) {
    const auto& sm = ensemble.samples[s];
    if (sm.buses.size() != topo.buses.size() || sm.lines.size() != topo.branches.size()) {
      fail(Errc::HashMismatch, "sample " + std::to_string(s) + " does not match the topology");
    }
    std::array<std::size_t, kPhaseCategories> count{};
    std::size_t buses = 0, hit = 0;
    double interruptions = 0.0, duration = 0.0;
    for (std::size_t b = 0; b < topo.buses.size(); ++b) {
      if (topo.buses[b].kind == BusKind::substation) continue;
      const auto& st = sm.buses[b];
      ++count[index_of(st.phase)];
      ++buses;
      interruptions += static_cast<double>(st.interruptions_per_year);
      if (st.duration_h > 0) {
        duration += st.duration_h;
        ++hit;
      }
    }
    for (std::size_t k = 0; k < kPhaseCategories; ++k) {
      share[k][s] = buses ? 100.0 * static_cast<double>(count[k]) / static_cast<double>(buses) : 0.0;
    }
    caifi[s] = buses ? interruptions / static_cast<double>(buses) : 0.0;
    caidi[s] = hit ? duration / static_cast<double>(hit) : 0.0;
    demand[s] = sm.total_demand_kw();

    double sr = 0.0, sx = 0.0, srx = 0.0;
    std::size_t nrx = 0;
    for (const auto& l : sm.lines) {
      sr += l.r1_ohm;
      sx += l.x1_ohm;
      if (l.x1_ohm > 0) {
        srx += l.r1_ohm / l.x1_ohm;
        ++nrx;
      }
    }
    const double nl = static_cast<double>(sm.lines.size());
    r[s] = nl > 0 ? sr / nl : 0.0;
    x[s] = nl > 0 ? sx / nl : 0.0;
    rx[s] = nrx ? srx / static_cast<double>(nrx) : 0.0;
  }

  std::vector<StatRow> rows;
  for (std::size_t k = 0; k < kPhaseCategories; ++k) {
    rows.push_back(summarize("phase_" + std::string(to_string(kAllPhases[k])) + "_pct", share[k], hdi_mass));
  }
  rows.push_back(summarize("total_demand_kw", demand, hdi_mass));
  rows.push_back(summarize("mean_r1_ohm", r, hdi_mass));
  rows.push_back(summarize("mean_x1_ohm", x, hdi_mass));
  rows.push_back(summarize("mean_r_over_x", rx, hdi_mass));
  rows.push_back(summarize("caifi", caifi, hdi_mass));
  rows.push_back(summarize("caidi_h", caidi, hdi_mass));
  return rows;
}

std::string render_stats_csv(std::span<const StatRow> rows) {
  std::string out = "metric,mean,hdi_lo,hdi_hi\n";
  for (const auto& r : rows) {
    out += r.metric + ',' + format_sig(r.mean, 8) + ',' + format_sig(r.hdi_lo, 8) + ',' + format_sig(r.hdi_hi, 8) + '\n';
  }
  return out;
}

void write_ensemble_stats(const Ensemble& ensemble, const GridTopology& topo, double hdi_mass, const std::string& path) {
  const auto rows = ensemble_stats(ensemble, topo, hdi_mass);
  write_file(path, render_stats_csv(rows));
}

}  // namespace gridsynth
