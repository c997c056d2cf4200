#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridsynth/powerflow.hpp"
#include "gridsynth/synthesis.hpp"
#include "gridsynth/topology.hpp"

namespace gridsynth {

struct SnapshotInputs {
  std::vector<double> load_multiplier;  // per hour, >= 0
  std::vector<double> irradiance;       // per hour, in [0, 1]

  /// Throws InvalidArgument on bad lengths or values.
  void validate() const;
  /// Hour maximizing irradiance - load multiplier; ties go to the earliest.
  std::size_t worst_hour() const;
};

/// Synthetic 24-hour stand-ins for measured profiles.
std::vector<double> default_load_profile();
std::vector<double> default_irradiance_profile();

/// Two-column CSV (`hour,<column>`); rows must be dense from hour 0.
std::vector<double> parse_profile_csv(std::string_view text, std::string_view column);

struct HcSearch {
  double lo_kw = 0.0;
  double hi_kw = 10000.0;
  double tol_kw = 1.0;
};

/// Largest rated PV total (kW) spread uniformly over `buses` (each share split
/// equally over that bus's active phases, unity power factor, scaled by
/// `irradiance`) keeping the network converged with every voltage <= band.hi.
/// `net` must already carry the snapshot's loads. Throws BaseCaseViolation
/// when the zero-PV case fails.
double injection_hosting_capacity(const ThreePhaseNetwork& net, std::span<const std::size_t> buses, double irradiance,
                                  VoltageBand band, const HcSearch& search, const PfOptions& pf = {});

/// Feasibility of a given PV total, as used by the search.
bool pv_feasible(const ThreePhaseNetwork& net, std::span<const std::size_t> buses, double pv_kw, double irradiance,
                 VoltageBand band, const PfOptions& pf = {});

/// `net` with every load scaled by `multiplier`.
ThreePhaseNetwork scale_loads(const ThreePhaseNetwork& net, double multiplier);

/// Single-bus capacity at the worst-case hour (or the minimum over all hours
/// when `full_horizon`).
double bus_hosting_capacity(const ThreePhaseNetwork& net, std::size_t bus, const SnapshotInputs& snapshot,
                            VoltageBand band, const HcSearch& search, const PfOptions& pf = {},
                            bool full_horizon = false);

enum class HcLevel { bus, transformer, system };
HcLevel parse_hc_level(std::string_view text);
std::string_view to_string(HcLevel level) noexcept;

struct HcOptions {
  HcLevel level = HcLevel::bus;
  VoltageBand band;
  HcSearch search;
  PfOptions pf;
  double s_base_mva = 1.0;
  bool full_horizon = false;
  double hdi_mass = 0.94;
  unsigned jobs = 1;
};

struct HcDistributions {
  HcLevel level = HcLevel::bus;
  std::vector<std::string> elements;        // bus ids, transformer ids, or "system"
  std::vector<std::vector<double>> values;  // [element][sample], kW

  struct Summary {
    std::string element;
    double mean = 0.0;
    double hdi_lo = 0.0;
    double hdi_hi = 0.0;
  };
  std::vector<Summary> summarize(double hdi_mass) const;
};

/// Throws EmptyEnsemble, BaseCaseViolation.
HcDistributions ensemble_hosting_capacity(const Ensemble& ensemble, const GridTopology& topo,
                                          const SnapshotInputs& snapshot, const HcOptions& options);

/// element,sample_idx,hc_kw
std::string render_hc_csv(const HcDistributions& hc);
/// element,mean_kw,hdi_lo_kw,hdi_hi_kw
std::string render_hc_summary_csv(const HcDistributions& hc, double hdi_mass);

}  // namespace gridsynth
