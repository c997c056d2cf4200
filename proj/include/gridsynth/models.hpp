#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gridsynth/mcmc.hpp"
#include "gridsynth/phase.hpp"
#include "gridsynth/random.hpp"

namespace gridsynth {

// --- training records -----------------------------------------------------

struct BusRecord {
  std::string bus_id;
  std::optional<double> distance_km;
  std::optional<int> hop_zone;
  Phase phase = Phase::ABC;
  std::array<double, 3> p_kw{};  // per conductor A, B, C
  long interruptions_per_year = 0;
  std::vector<double> interruption_durations_h;
  double building_scale = 1.0;
};

struct LineRecord {
  std::string line_id;
  std::string from_bus;
  std::string to_bus;
  double length_km = 0.0;
  double r1_ohm = 0.0;
  double x1_ohm = 0.0;
  std::optional<double> distance_km;
  std::optional<int> hop_zone;
};

/// `bus_records.csv`: bus_id, distance_km, hop_zone, phase, p_kw_a, p_kw_b,
/// p_kw_c, interruptions_per_year, interruption_durations_h (';'-separated),
/// building_scale. Empty cells mean "absent".
std::vector<BusRecord> parse_bus_records(std::string_view csv);
std::string render_bus_records(std::span<const BusRecord> records);

/// `line_records.csv`: line_id, from_bus, to_bus, length_km, r1_ohm, x1_ohm,
/// distance_km, hop_zone.
std::vector<LineRecord> parse_line_records(std::string_view csv);
std::string render_line_records(std::span<const LineRecord> records);

/// Zone per record: the hop_zone column when present (0 is read as zone 1),
/// otherwise distance_km binned against the dataset's maximum distance.
std::vector<int> training_zones(std::span<const std::optional<int>> hop_zone,
                                std::span<const std::optional<double>> distance_km, int zones);
std::vector<int> training_zones(std::span<const BusRecord> records, int zones);
std::vector<int> training_zones(std::span<const LineRecord> records, int zones);

// --- priors -----------------------------------------------------------------

struct WeibullParams {
  double shape = 1.0;
  double scale = 1.0;
  double mean() const;

  friend bool operator==(const WeibullParams&, const WeibullParams&) = default;
};

struct Priors {
  double dirichlet = 1.0;           // symmetric prior on the phase simplex
  double power_log_sd = 1.5;        // around the pooled per-configuration mean
  double sigma_log_sd = 1.5;
  double sigma_floor_kw = 0.1;
  double mixture_concentration = 0.5;
  double freq_log_mu_mean = 0.0;
  double freq_log_mu_sd = 2.0;
  double freq_log_alpha_mean = 0.0;
  double freq_log_alpha_sd = 1.0;
  double beta_a = 1.0;
  double beta_b = 1.0;
  double weibull_log_shape_mean = 0.0;
  double weibull_log_shape_sd = 1.0;
  double weibull_log_scale_mean = 1.0986122886681098;  // log 3 h
  double weibull_log_scale_sd = 2.0;
  WeibullParams default_weibull{1.2, 3.0};
  int em_restarts = 10;
  int em_max_iter = 500;
  double em_tol = 1e-8;
};

/// Priors from a JSON object; unknown keys are rejected (SchemaMismatch).
Priors parse_priors(std::string_view json_text);

// --- posteriors -------------------------------------------------------------

enum class ModelKind { power, impedance, frequency, duration };
std::string_view to_string(ModelKind kind) noexcept;

using Simplex7 = std::array<double, kPhaseCategories>;

struct PowerDraw {
  std::vector<Simplex7> c;                     // per zone phase probabilities
  std::vector<std::array<double, 3>> p_pot;    // per zone, per conductor count (1..3), kW
  double sigma_p = 1.0;                        // kW

  friend bool operator==(const PowerDraw&, const PowerDraw&) = default;
};

struct PowerPosterior {
  int zones = 1;
  std::vector<Simplex7> concentration;  // Dirichlet parameters per zone
  std::vector<PowerDraw> draws;

  friend bool operator==(const PowerPosterior&, const PowerPosterior&) = default;
};

struct GammaComponent {
  double shape = 1.0;
  double rate = 1.0;
  double mean() const { return shape / rate; }

  friend bool operator==(const GammaComponent&, const GammaComponent&) = default;
};

inline constexpr std::size_t kMixtureComponents = 3;
using MixWeights = std::array<double, kMixtureComponents>;

struct ImpedanceDraw {
  std::vector<MixWeights> w_r;    // per zone, resistance per km
  std::vector<MixWeights> w_rho;  // per zone, X/R ratio

  friend bool operator==(const ImpedanceDraw&, const ImpedanceDraw&) = default;
};

struct ImpedancePosterior {
  int zones = 1;
  std::array<GammaComponent, kMixtureComponents> gamma_r{};
  std::array<GammaComponent, kMixtureComponents> gamma_rho{};
  std::vector<MixWeights> concentration_r;
  std::vector<MixWeights> concentration_rho;
  std::vector<ImpedanceDraw> draws;

  friend bool operator==(const ImpedancePosterior&, const ImpedancePosterior&) = default;
};

struct FrequencyDraw {
  std::vector<double> mu;  // mean interruptions/year per zone
  double alpha = 1.0;      // negative-binomial dispersion

  friend bool operator==(const FrequencyDraw&, const FrequencyDraw&) = default;
};

struct FrequencyPosterior {
  int zones = 1;
  std::vector<FrequencyDraw> draws;

  friend bool operator==(const FrequencyPosterior&, const FrequencyPosterior&) = default;
};

struct DurationDraw {
  std::vector<double> p;                // probability of any interruption per zone
  std::vector<WeibullParams> weibull;   // duration law per zone (hours)

  friend bool operator==(const DurationDraw&, const DurationDraw&) = default;
};

struct DurationPosterior {
  int zones = 1;
  std::vector<std::array<double, 2>> beta;  // Beta(a, b) per zone
  std::vector<DurationDraw> draws;

  friend bool operator==(const DurationPosterior&, const DurationPosterior&) = default;
};

using AnyPosterior = std::variant<PowerPosterior, ImpedancePosterior, FrequencyPosterior, DurationPosterior>;

/// Throws SchemaMismatch when a posterior breaks its invariants.
void validate(const PowerPosterior& p);
void validate(const ImpedancePosterior& p);
void validate(const FrequencyPosterior& p);
void validate(const DurationPosterior& p);

// --- learning ---------------------------------------------------------------

struct LearnReport {
  std::size_t skipped_records = 0;
  double acceptance = 0.0;
};

PowerPosterior learn_power(std::span<const BusRecord> records, int zones, const Priors& priors,
                           const McmcConfig& cfg, LearnReport* report = nullptr);
ImpedancePosterior learn_impedance(std::span<const LineRecord> records, int zones, const Priors& priors,
                                   const McmcConfig& cfg, LearnReport* report = nullptr);
FrequencyPosterior learn_frequency(std::span<const BusRecord> records, int zones, const Priors& priors,
                                   const McmcConfig& cfg, LearnReport* report = nullptr);
DurationPosterior learn_duration(std::span<const BusRecord> records, int zones, const Priors& priors,
                                 const McmcConfig& cfg, LearnReport* report = nullptr);

struct GammaMixtureFit {
  std::array<GammaComponent, kMixtureComponents> components{};
  MixWeights weights{};
  std::vector<MixWeights> responsibilities;
  double log_likelihood = 0.0;
  std::size_t active = 0;  // components kept by BIC selection
};

/// EM fit of a three-component Gamma mixture with random restarts. Component
/// counts 1..3 are compared by BIC; unused slots carry the single-Gamma fit
/// with zero weight. Components are ordered by ascending mean.
GammaMixtureFit fit_gamma_mixture(std::span<const double> values, const Priors& priors, Rng& rng);

// --- sampling ---------------------------------------------------------------

struct NodeAttributes {
  Phase phase = Phase::ABC;
  std::array<double, 3> p_kw{};
};

Phase sample_phase(const PowerPosterior& post, int zone, PhaseSet allowed, std::size_t draw, Rng& rng);
std::array<double, 3> sample_power(const PowerPosterior& post, int zone, Phase phase, double building_scale,
                                   std::size_t draw, Rng& rng);
NodeAttributes sample_node_attributes(const PowerPosterior& post, int zone, PhaseSet allowed, std::size_t draw,
                                      Rng& rng, double building_scale = 1.0);

struct LineAttributes {
  double r1_ohm = 0.0;
  double x1_ohm = 0.0;
};

LineAttributes sample_line_attributes(const ImpedancePosterior& post, int zone, double length_km, std::size_t draw,
                                      Rng& rng);

struct ReliabilityAttributes {
  long interruptions_per_year = 0;
  double duration_h = 0.0;
};

ReliabilityAttributes sample_reliability(const FrequencyPosterior& freq, const DurationPosterior& dur, int zone,
                                         std::size_t draw, Rng& rng);

/// Expected total demand of one load bus by zone (index 0 = zone 1),
/// averaged over draws and phase configurations.
std::vector<double> expected_bus_demand_kw(const PowerPosterior& post);

// --- shipped defaults -------------------------------------------------------

inline constexpr std::size_t kDefaultDraws = 500;

PowerPosterior default_power_posterior(int zones = 5, std::size_t draws = kDefaultDraws);
ImpedancePosterior default_impedance_posterior(int zones = 5, std::size_t draws = kDefaultDraws);
FrequencyPosterior default_frequency_posterior(int zones = 5, std::size_t draws = kDefaultDraws);
DurationPosterior default_duration_posterior(int zones = 5, std::size_t draws = kDefaultDraws);

/// Mean phase shares of the shipped power model, in category order (sum 1).
Simplex7 default_phase_shares();

// --- persistence ------------------------------------------------------------

std::string serialize_posterior(const AnyPosterior& posterior);
AnyPosterior parse_posterior(std::string_view text);
void save_posterior(const AnyPosterior& posterior, const std::string& path);

/// `source` is a file path or the tag "default" (built at `default_zones`).
/// Throws MissingFile, SchemaMismatch, ModelKindMismatch.
AnyPosterior load_posterior(const std::string& source, ModelKind kind, int default_zones = 5);

ModelKind kind_of(const AnyPosterior& posterior) noexcept;
int zones_of(const AnyPosterior& posterior) noexcept;
std::size_t draw_count(const AnyPosterior& posterior) noexcept;

/// File name used inside a params directory, e.g. "power.json".
std::string posterior_file_name(ModelKind kind);

}  // namespace gridsynth
