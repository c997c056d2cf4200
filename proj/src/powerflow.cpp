#include "gridsynth/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "gridsynth/error.hpp"
#include "gridsynth/util.hpp"

namespace gridsynth {

std::size_t ThreePhaseNetwork::add_bus(double kv, std::uint8_t conductors) {
  base_kv.push_back(kv);
  mask.push_back(conductors);
  injection.push_back({});
  return mask.size() - 1;
}

cplx source_voltage(int conductor) {
  static const std::array<cplx, 3> v = {std::polar(1.0, 0.0), std::polar(1.0, -2.0 * std::numbers::pi / 3.0),
                                        std::polar(1.0, 2.0 * std::numbers::pi / 3.0)};
  return v[static_cast<std::size_t>(conductor)];
}

ThreePhaseNetwork build_pf_network(const GridSample& sample, const GridTopology& topo, double s_base_mva,
                                   std::string_view known_hash) {
  if (!(s_base_mva > 0)) fail(Errc::InvalidArgument, "s_base must be positive");
  const std::string hash = known_hash.empty() ? topology_hash(topo) : std::string(known_hash);
  if (sample.topology_hash != hash || sample.buses.size() != topo.buses.size() ||
      sample.lines.size() != topo.branches.size()) {
    fail(Errc::HashMismatch, "sample was generated for a different topology");
  }
  ThreePhaseNetwork net;
  net.s_base_mva = s_base_mva;
  const double s_phase_kva = s_base_mva * 1000.0 / 3.0;
  for (std::size_t b = 0; b < topo.buses.size(); ++b) {
    const auto& st = sample.buses[b];
    const auto m = conductor_mask(st.phase);
    net.add_bus(topo.buses[b].voltage_kv, m);
    for (int c = 0; c < 3; ++c) {
      if ((m >> c) & 1u) net.injection[b][c] = -cplx(st.p_kw[c], st.q_kvar[c]) / s_phase_kva;
    }
  }
  for (std::size_t l = 0; l < topo.branches.size(); ++l) {
    const auto& br = topo.branches[l];
    const double kv = topo.buses[br.from].voltage_kv;
    const cplx z = cplx(sample.lines[l].r1_ohm, sample.lines[l].x1_ohm) / (kv * kv / s_base_mva);
    PfBranch pb{br.from, br.to, {}, net.mask[br.to]};
    for (int c = 0; c < 3; ++c) pb.z[c] = ((pb.mask >> c) & 1u) ? z : cplx{};
    net.branches.push_back(pb);
  }
  for (const auto& t : topo.transformers) {
    const double scale = s_base_mva / (t.rating_kva / 1000.0);
    const double r = t.vkr_percent / 100.0;
    const double x = std::sqrt(std::max(0.0, t.vk_percent * t.vk_percent - t.vkr_percent * t.vkr_percent)) / 100.0;
    PfBranch pb{t.hv_bus, t.lv_bus, {}, net.mask[t.lv_bus]};
    for (int c = 0; c < 3; ++c) pb.z[c] = ((pb.mask >> c) & 1u) ? cplx(r, x) * scale : cplx{};
    net.branches.push_back(pb);
  }
  for (const auto& f : topo.feeders) net.sources.push_back(f.source_bus);
  return net;
}

PFResult solve_fbs(const ThreePhaseNetwork& net, const PfOptions& options) {
  const auto n = net.size();
  // Orientation: parent branch per bus and a breadth-first order from sources.
  std::vector<std::vector<std::size_t>> incident(n);
  for (std::size_t e = 0; e < net.branches.size(); ++e) {
    const auto& br = net.branches[e];
    if (br.from >= n || br.to >= n) fail(Errc::NonRadialTopology, "branch references an unknown bus");
    incident[br.from].push_back(e);
    incident[br.to].push_back(e);
  }
  std::vector<std::ptrdiff_t> parent(n, -1);
  std::vector<std::ptrdiff_t> parent_branch(n, -1);
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (auto s : net.sources) {
    if (s >= n || seen[s]) fail(Errc::NonRadialTopology, "invalid or repeated source bus");
    seen[s] = true;
    std::deque<std::size_t> q{s};
    while (!q.empty()) {
      const auto u = q.front();
      q.pop_front();
      order.push_back(u);
      for (auto e : incident[u]) {
        if (static_cast<std::ptrdiff_t>(e) == parent_branch[u]) continue;
        const auto& br = net.branches[e];
        const auto v = br.from == u ? br.to : br.from;
        if (seen[v]) fail(Errc::NonRadialTopology, "loop in power-flow network");
        seen[v] = true;
        parent[v] = static_cast<std::ptrdiff_t>(u);
        parent_branch[v] = static_cast<std::ptrdiff_t>(e);
        q.push_back(v);
      }
    }
  }
  if (order.size() != n) fail(Errc::NonRadialTopology, "buses unreachable from any source");

  PFResult res;
  res.mask = net.mask;
  res.voltage.assign(n, {});
  for (std::size_t b = 0; b < n; ++b) {
    for (int c = 0; c < 3; ++c) {
      if ((net.mask[b] >> c) & 1u) res.voltage[b][c] = source_voltage(c);
    }
  }

  std::vector<Phasor3> current(n);
  for (int it = 1; it <= options.max_iter; ++it) {
    // Backward: current drawn by each bus plus everything below it.
    for (std::size_t b = 0; b < n; ++b) {
      for (int c = 0; c < 3; ++c) {
        const auto& v = res.voltage[b][c];
        current[b][c] = ((net.mask[b] >> c) & 1u) && v != cplx{} ? -std::conj(net.injection[b][c] / v) : cplx{};
      }
    }
    for (auto it_o = order.rbegin(); it_o != order.rend(); ++it_o) {
      const auto b = *it_o;
      if (parent[b] < 0) continue;
      auto& up = current[static_cast<std::size_t>(parent[b])];
      for (int c = 0; c < 3; ++c) up[c] += current[b][c];
    }
    // Forward: voltage drop along each branch.
    double delta = 0.0;
    bool finite = true;
    for (auto b : order) {
      if (parent[b] < 0) continue;
      const auto& br = net.branches[static_cast<std::size_t>(parent_branch[b])];
      const auto& vp = res.voltage[static_cast<std::size_t>(parent[b])];
      for (int c = 0; c < 3; ++c) {
        if (!((net.mask[b] >> c) & 1u)) continue;
        const cplx v = vp[c] - br.z[c] * current[b][c];
        delta = std::max(delta, std::abs(v - res.voltage[b][c]));
        finite = finite && std::isfinite(v.real()) && std::isfinite(v.imag()) && std::abs(v) < 1e6;
        res.voltage[b][c] = v;
      }
    }
    res.iterations = it;
    res.max_mismatch = delta;
    if (!finite) {
      res.max_mismatch = std::numeric_limits<double>::quiet_NaN();
      return res;
    }
    if (delta < options.tol) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

PhaseExtrema phase_extrema(const PFResult& r) {
  PhaseExtrema e;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  e.min.fill(nan);
  e.max.fill(nan);
  for (std::size_t b = 0; b < r.voltage.size(); ++b) {
    for (int c = 0; c < 3; ++c) {
      if (!((r.mask[b] >> c) & 1u)) continue;
      const double m = std::abs(r.voltage[b][c]);
      if (std::isnan(e.min[c]) || m < e.min[c]) e.min[c] = m;
      if (std::isnan(e.max[c]) || m > e.max[c]) e.max[c] = m;
    }
  }
  return e;
}

bool in_band(const PFResult& r, VoltageBand band) {
  if (!r.converged) return false;
  for (std::size_t b = 0; b < r.voltage.size(); ++b) {
    for (int c = 0; c < 3; ++c) {
      if (!((r.mask[b] >> c) & 1u)) continue;
      const double m = std::abs(r.voltage[b][c]);
      if (!(m >= band.lo && m <= band.hi)) return false;
    }
  }
  return true;
}

VoltageStats summarize_voltages(std::span<const PFResult> results, VoltageBand band, HistogramSpec spec) {
  if (results.empty()) fail(Errc::EmptyInput, "no power-flow results to summarize");
  if (!(spec.hi > spec.lo) || spec.bins == 0) fail(Errc::InvalidArgument, "bad histogram range");
  VoltageStats s;
  s.samples = results.size();
  s.spec = spec;
  for (auto& h : s.histogram) h.assign(spec.bins, 0);
  s.min.fill(std::numeric_limits<double>::infinity());
  s.max.fill(-std::numeric_limits<double>::infinity());
  std::size_t conv = 0;
  std::size_t inside = 0;
  const double width = (spec.hi - spec.lo) / static_cast<double>(spec.bins);
  for (const auto& r : results) {
    conv += r.converged ? 1 : 0;
    inside += in_band(r, band) ? 1 : 0;
    if (!r.converged) continue;
    for (std::size_t b = 0; b < r.voltage.size(); ++b) {
      for (int c = 0; c < 3; ++c) {
        if (!((r.mask[b] >> c) & 1u)) continue;
        const double m = std::abs(r.voltage[b][c]);
        s.min[c] = std::min(s.min[c], m);
        s.max[c] = std::max(s.max[c], m);
        auto bin = static_cast<std::ptrdiff_t>(std::floor((m - spec.lo) / width));
        bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(spec.bins) - 1);
        ++s.histogram[c][static_cast<std::size_t>(bin)];
      }
    }
  }
  s.convergence_rate = static_cast<double>(conv) / static_cast<double>(results.size());
  s.in_band_fraction = static_cast<double>(inside) / static_cast<double>(results.size());
  return s;
}

std::string render_validation_csv(std::span<const PFResult> results, VoltageBand band) {
  std::string out = "sample_idx,converged,iterations,min_a,max_a,min_b,max_b,min_c,max_c,in_band\n";
  auto num = [](double v) { return std::isnan(v) ? std::string() : format_sig(v, 8); };
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    const auto e = phase_extrema(r);
    out += std::to_string(k) + ',' + (r.converged ? "1" : "0") + ',' + std::to_string(r.iterations);
    for (int c = 0; c < 3; ++c) out += ',' + num(e.min[c]) + ',' + num(e.max[c]);
    out += std::string(",") + (in_band(r, band) ? "1" : "0") + '\n';
  }
  return out;
}

std::string render_histogram_csv(const VoltageStats& stats) {
  std::string out = "bin_lo,bin_hi,count_a,count_b,count_c\n";
  const double width = (stats.spec.hi - stats.spec.lo) / static_cast<double>(stats.spec.bins);
  for (std::size_t i = 0; i < stats.spec.bins; ++i) {
    out += format_sig(stats.spec.lo + width * static_cast<double>(i)) + ',' +
           format_sig(stats.spec.lo + width * static_cast<double>(i + 1));
    for (int c = 0; c < 3; ++c) out += ',' + std::to_string(stats.histogram[c][i]);
    out += '\n';
  }
  return out;
}

std::string render_histogram_svg(const VoltageStats& stats) {
  constexpr double panel_w = 600.0;
  constexpr double panel_h = 160.0;
  constexpr double margin = 30.0;
  const double total_h = 3.0 * (panel_h + margin) + margin;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_sig(panel_w + 2 * margin) +
                    "\" height=\"" + format_sig(total_h) + "\">\n";
  const char* names[] = {"Phase A", "Phase B", "Phase C"};
  const double bar_w = panel_w / static_cast<double>(stats.spec.bins);
  for (int c = 0; c < 3; ++c) {
    const auto& h = stats.histogram[c];
    const double peak = static_cast<double>(std::max<std::size_t>(1, *std::max_element(h.begin(), h.end())));
    const double top = margin + c * (panel_h + margin);
    svg += "<text x=\"" + format_sig(margin) + "\" y=\"" + format_sig(top - 8) + "\" font-size=\"12\">" + names[c] +
           "</text>\n";
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double bh = panel_h * static_cast<double>(h[i]) / peak;
      svg += "<rect x=\"" + format_sig(margin + bar_w * static_cast<double>(i)) + "\" y=\"" +
             format_sig(top + panel_h - bh) + "\" width=\"" + format_sig(bar_w * 0.9) + "\" height=\"" + format_sig(bh) +
             "\" fill=\"steelblue\"/>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace gridsynth
