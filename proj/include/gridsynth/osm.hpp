#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridsynth/geo.hpp"

namespace gridsynth::osm {

using Tags = std::map<std::string, std::string>;

struct Node {
  std::int64_t id = 0;
  double lat = 0.0;
  double lon = 0.0;
  Tags tags;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Way {
  std::int64_t id = 0;
  std::vector<std::int64_t> nodes;
  Tags tags;

  friend bool operator==(const Way&, const Way&) = default;
};

struct Provenance {
  std::string source;        // file path or endpoint URL
  std::string retrieved_at;  // UTC timestamp for fetched data, empty for files
  std::size_t dropped_ways = 0;
  std::size_t duplicate_elements = 0;
};

struct OsmExtract {
  std::vector<Node> nodes;
  std::vector<Way> ways;
  Provenance provenance;
};

struct BBox {
  double south = 0.0;
  double west = 0.0;
  double north = 0.0;
  double east = 0.0;
};

enum class QueryKind { city, point, bbox, address };

struct RegionQuery {
  QueryKind kind = QueryKind::point;
  std::string city_name;
  LatLon center;
  double dist_m = 0.0;
  BBox bbox;
  std::string address;

  static RegionQuery city(std::string name);
  static RegionQuery point(LatLon center, double dist_m);
  static RegionQuery box(BBox bbox);
  static RegionQuery at_address(std::string address, double dist_m);

  /// Throws InvalidArgument when the fields for `kind` are missing or invalid.
  void validate() const;
};

struct StreetVertex {
  std::int64_t id = 0;
  LatLon pos;
};

struct StreetEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double length_km = 0.0;
  std::int64_t way_id = 0;
};

/// Undirected, simple, connected street graph (largest component of the
/// highway network). Vertices are sorted by OSM id.
struct StreetGraph {
  std::vector<StreetVertex> vertices;
  std::vector<StreetEdge> edges;
  std::size_t dropped_vertices = 0;

  struct Arc {
    std::size_t to;
    std::size_t edge;
  };
  std::vector<std::vector<Arc>> adjacency() const;
};

struct PointFeature {
  std::int64_t id = 0;
  LatLon pos;
  Tags tags;
};

struct LineFeature {
  std::int64_t way_id = 0;
  std::vector<std::int64_t> node_ids;
  std::vector<LatLon> polyline;
  Tags tags;
};

struct PowerFeatures {
  std::vector<PointFeature> substations;
  std::vector<LineFeature> transmission_ways;
  std::vector<PointFeature> generators;
  std::vector<LatLon> buildings;
};

/// Parses an Overpass JSON result (`{"elements": [...]}`). Ways that reference
/// nodes absent from the document are dropped and counted in provenance.
OsmExtract parse_overpass_document(std::string_view raw, std::string source = {});

/// Inverse of parse_overpass_document for the node/way subset.
std::string serialize_overpass_document(const OsmExtract& extract);

StreetGraph extract_street_graph(const OsmExtract& extract);

PowerFeatures extract_power_features(const OsmExtract& extract);

struct RetryPolicy {
  int max_attempts = 3;
  double backoff_s = 2.0;
};

struct GeocodeResult {
  LatLon center;
  std::optional<BBox> bbox;
};

/// Maps free text to a location. An empty function means "unconfigured".
using Geocoder = std::function<GeocodeResult(const std::string&)>;

/// Nominatim-compatible geocoder (`<endpoint>/search?q=...&format=json`).
Geocoder http_geocoder(std::string endpoint);

/// Overpass QL for a point/bbox query; city and address queries must be
/// resolved through the geocoder first.
std::string build_overpass_query(const RegionQuery& query);

struct FetchResult {
  OsmExtract extract;
  std::string raw;
};

FetchResult fetch_region(const RegionQuery& query, const std::string& endpoint,
                         const RetryPolicy& retry = {}, const Geocoder& geocoder = {});

}  // namespace gridsynth::osm
