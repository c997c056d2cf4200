#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gridsynth/models.hpp"
#include "gridsynth/osm.hpp"
#include "gridsynth/powerflow.hpp"
#include "gridsynth/synthesis.hpp"
#include "gridsynth/topology.hpp"

namespace fixtures {

using namespace gridsynth;

/// Jittered street lattice with substations, a transmission line, a
/// generator and buildings, in Overpass layout.
struct LatticeSpec {
  int rows = 10;
  int cols = 10;
  double spacing_m = 120.0;
  double origin_lat = -23.649;
  double origin_lon = -46.702;
  double jitter = 0.25;            // fraction of the spacing
  double drop_edge_p = 0.0;        // random street removals
  int substations = 1;
  bool transmission = true;
  int buildings_per_vertex = 1;
  std::uint64_t seed = 1;
};

osm::OsmExtract lattice_extract(const LatticeSpec& spec);
std::string lattice_document(const LatticeSpec& spec);

GridTopology lattice_topology(const LatticeSpec& spec, TopologyOptions options = {});

/// Root substation with `n` load-point children directly attached (one zone).
GridTopology star_topology(std::size_t n, double lv_kv = 0.22, double length_km = 0.03);

/// Substation, then `n` load buses in series (one zone, no transformers).
GridTopology chain_topology(std::size_t n, double kv, double length_km);

/// Independent complex fixed-point solve, bus by bus: V = V_src - sum over the
/// path of z_e * (sum of downstream conj(S/V)). Explicit path sums instead of
/// a sweep; intended for tiny networks.
std::vector<Phasor3> fixed_point_voltages(const ThreePhaseNetwork& net, double tol = 1e-14, int max_iter = 10000);

/// Synthetic training data from known parameters.
struct PowerTruth {
  int zones = 3;
  std::vector<Simplex7> c;                   // per zone
  std::vector<std::array<double, 3>> p_pot;  // per zone, by conductor count
  double sigma = 0.5;
};
std::vector<BusRecord> simulate_power_records(const PowerTruth& truth, std::size_t per_zone, std::uint64_t seed);

struct ReliabilityTruth {
  int zones = 3;
  std::vector<double> mu;
  double alpha = 1.5;
  std::vector<double> p;
  std::vector<WeibullParams> weibull;
};
std::vector<BusRecord> simulate_reliability_records(const ReliabilityTruth& truth, std::size_t per_zone,
                                                    std::uint64_t seed);

struct ImpedanceTruth {
  int zones = 3;
  std::array<GammaComponent, 3> gamma_r{};
  std::array<GammaComponent, 3> gamma_rho{};
  std::vector<MixWeights> w_r;
  std::vector<MixWeights> w_rho;
};
std::vector<LineRecord> simulate_line_records(const ImpedanceTruth& truth, std::size_t per_zone, std::uint64_t seed);

/// Fresh scratch directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& leaf) const { return (path_ / leaf).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
