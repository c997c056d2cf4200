#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gridsynth/geo.hpp"
#include "gridsynth/osm.hpp"

namespace gridsynth {

enum class BusKind { mv, lv, substation };

struct Bus {
  std::string id;
  LatLon pos;
  double voltage_kv = 0.0;
  BusKind kind = BusKind::mv;
  std::size_t feeder = 0;
  bool load_point = false;   // LV bus that carries customer demand
  double building_scale = 1.0;
  std::int64_t street_vertex = 0;  // OSM node the bus sits on
};

/// Distribution line, oriented from the upstream bus.
struct Branch {
  std::string id;
  std::size_t from = 0;
  std::size_t to = 0;
  double length_km = 0.0;
};

struct Transformer {
  std::string id;
  std::size_t hv_bus = 0;
  std::size_t lv_bus = 0;
  double rating_kva = 0.0;
  double vk_percent = 0.0;
  double vkr_percent = 0.0;
};

struct Feeder {
  std::int64_t substation_id = 0;  // OSM id, negative for injected substations
  std::size_t source_bus = 0;
};

enum class DistanceMethod { topological, electrical, euclidean };

std::string_view to_string(DistanceMethod m) noexcept;
DistanceMethod parse_distance_method(std::string_view text);

/// Zones are 1-based; line zones follow the upstream bus.
struct HopZoneAssignment {
  int zones = 1;
  std::vector<int> node_zone;
  std::vector<int> line_zone;
  std::vector<double> node_distance_km;
};

struct HvBus {
  std::string id;
  LatLon pos;
  double voltage_kv = 0.0;
  bool generation = false;
};

struct HvLine {
  std::string id;
  std::size_t from = 0;
  std::size_t to = 0;
  double length_km = 0.0;
  double r_ohm_per_km = 0.0;
  double x_ohm_per_km = 0.0;
};

struct GridTransformer {
  std::string id;
  std::size_t hv_bus = 0;          // index into hv_buses
  std::size_t substation_bus = 0;  // index into GridTopology::buses
  double rating_mva = 0.0;
  double vk_percent = 0.0;
};

struct TransmissionLayer {
  std::vector<HvBus> hv_buses;
  std::vector<HvLine> hv_lines;
  std::vector<GridTransformer> grid_transformers;
  std::size_t external_source = 0;  // index into hv_buses, named "sourcebus"
};

struct GridTopology {
  std::string name = "synthetic";
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Transformer> transformers;
  std::vector<Feeder> feeders;
  DistanceMethod distance_method = DistanceMethod::topological;
  HopZoneAssignment zones;
  TransmissionLayer transmission;
};

// --- radial structure -------------------------------------------------------

enum class EdgeKind : std::uint8_t { none, line, transformer };

struct EdgeRef {
  EdgeKind kind = EdgeKind::none;
  std::size_t index = 0;
};

/// Parent/children view of the distribution forest (lines and distribution
/// transformers are the tree edges; each feeder root is its substation bus).
struct TreeIndex {
  std::vector<std::ptrdiff_t> parent;
  std::vector<EdgeRef> parent_edge;
  std::vector<std::vector<std::size_t>> children;
  std::vector<std::size_t> order;  // breadth-first, one feeder after another
};

/// Throws NonRadialTopology unless every feeder is a tree rooted at its source.
TreeIndex index_tree(const GridTopology& topo);

struct RadialityReport {
  std::size_t feeder = 0;
  std::size_t buses = 0;
  std::size_t edges = 0;
  bool connected = false;
  bool ok() const { return connected && edges + 1 == buses; }
};

/// Per-feeder edge/bus count and connectivity check, independent of index_tree.
std::vector<RadialityReport> check_radiality(const GridTopology& topo);

// --- topology pipeline ------------------------------------------------------

struct ServiceAssignment {
  std::vector<std::int64_t> substation_ids;    // sorted ascending
  std::vector<std::size_t> substation_vertex;  // snapped street vertex per substation
  std::vector<std::size_t> vertex_owner;       // street vertex -> substation position
  std::size_t merged_substations = 0;          // substations snapping onto an occupied vertex
};

/// Nearest-substation (haversine) partition of the street vertices; ties go to
/// the lowest substation id. A substation's own snapped vertex is always its own.
ServiceAssignment assign_service_areas(const osm::StreetGraph& street,
                                       std::span<const osm::PointFeature> substations);

struct FeederTree {
  std::size_t root = 0;
  std::vector<std::size_t> vertices;        // street vertex indices, settle order (root first)
  std::vector<std::ptrdiff_t> parent;       // position in `vertices`, -1 for root
  std::vector<double> edge_km;              // length of the edge to the parent
  std::vector<double> distance_km;          // shortest-path distance from root
  std::size_t dropped = 0;                  // assigned vertices unreachable inside the area
};

/// Shortest-path tree from `root` over street vertices flagged in `assigned`.
FeederTree build_radial_feeder(const osm::StreetGraph& street, std::size_t root, const std::vector<bool>& assigned);

/// Groups the non-root buses of a rooted tree into contiguous clusters of at
/// most `max_cluster` buses. Each cluster lists its head (closest to the
/// root) first. A tree with only the root yields one cluster holding the root.
std::vector<std::vector<std::size_t>> cluster_tree(const std::vector<std::ptrdiff_t>& parent, std::size_t max_cluster);

/// Root distance for every bus. `line_impedance_ohm` (|Z| per branch) is
/// required for the electrical method.
std::vector<double> compute_distance_metric(const GridTopology& topo, const TreeIndex& tree, DistanceMethod method,
                                            std::span<const double> line_impedance_ohm = {});

HopZoneAssignment compute_hop_zones(const GridTopology& topo, const TreeIndex& tree,
                                    std::span<const double> distance_km, int zones);

/// zone(d) = min(Z, 1 + floor(Z d / d_max)); d_max = 0 gives zone 1.
int zone_of(double distance, double d_max, int zones) noexcept;

struct HvDefaults {
  double kv = 138.0;
  double r_ohm_per_km = 0.05;
  double x_ohm_per_km = 0.4;
  double grid_transformer_mva = 25.0;
  double grid_transformer_vk_percent = 10.0;
};

TransmissionLayer overlay_transmission(const osm::PowerFeatures& features, const GridTopology& topo,
                                       const HvDefaults& defaults = {});

struct TopologyOptions {
  std::string name = "synthetic";
  int zones = 5;
  double mv_kv = 13.8;
  double lv_kv = 0.22;
  std::size_t max_cluster = 8;
  /// topological or euclidean; electrical zoning needs branch impedances and
  /// goes through rezone_topology after the build.
  DistanceMethod distance_method = DistanceMethod::topological;
  std::vector<LatLon> injected_substations;
  /// Expected demand per load bus by zone (index 0 = zone 1) for transformer
  /// sizing; empty means the default power parameters.
  std::vector<double> expected_bus_kw;
  HvDefaults hv;
};

struct TopologyReport {
  std::size_t dropped_street_vertices = 0;  // unreachable after reassignment
  std::size_t reassigned_vertices = 0;
  std::size_t merged_substations = 0;
};

/// Street graph + power features to a zoned radial topology with distribution
/// transformers and the transmission overlay.
GridTopology build_topology(const osm::StreetGraph& street, const osm::PowerFeatures& features,
                            const TopologyOptions& options, TopologyReport* report = nullptr);

/// Recomputes distances and hop zones in place (and transformer ratings, which
/// depend on zones).
void rezone_topology(GridTopology& topo, DistanceMethod method, int zones,
                     std::span<const double> line_impedance_ohm = {},
                     std::span<const double> expected_bus_kw = {});

inline constexpr std::array<double, 4> kTransformerLadderKva = {75.0, 150.0, 300.0, 500.0};
double pick_transformer_rating(double expected_peak_kw) noexcept;

// --- persistence --------------------------------------------------------------

std::string serialize_topology(const GridTopology& topo);
GridTopology parse_topology(std::string_view text);
std::string topology_hash(const GridTopology& topo);

}  // namespace gridsynth
