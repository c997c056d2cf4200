#include <chrono>
#include <ctime>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gridsynth/error.hpp"
#include "gridsynth/osm.hpp"
#include "gridsynth/util.hpp"

namespace gridsynth::osm {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail(Errc::InvalidArgument, "endpoint is not a URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_coord(double v) { return format_sig(v, 10); }

}  // namespace

std::string build_overpass_query(const RegionQuery& query) {
  query.validate();
  std::string filter;
  switch (query.kind) {
    case QueryKind::point:
    case QueryKind::address:
      filter = "(around:" + format_coord(query.dist_m) + "," + format_coord(query.center.lat) + "," +
               format_coord(query.center.lon) + ")";
      break;
    case QueryKind::bbox:
      filter = "(" + format_coord(query.bbox.south) + "," + format_coord(query.bbox.west) + "," +
               format_coord(query.bbox.north) + "," + format_coord(query.bbox.east) + ")";
      break;
    case QueryKind::city:
      fail(Errc::GeocodeUnavailable, "city queries must be resolved to a bbox before building a query");
  }
  std::ostringstream q;
  q << "[out:json][timeout:180];\n(\n"
    << "  way[\"highway\"]" << filter << ";\n"
    << "  node[\"power\"~\"^(substation|generator|plant)$\"]" << filter << ";\n"
    << "  way[\"power\"~\"^(substation|line|generator|plant)$\"]" << filter << ";\n"
    << "  way[\"building\"]" << filter << ";\n"
    << ");\n(._;>;);\nout body;\n";
  return q.str();
}

Geocoder http_geocoder(std::string endpoint) {
  return [endpoint = std::move(endpoint)](const std::string& text) -> GeocodeResult {
    const auto url = split_url(endpoint);
    httplib::Client client(url.origin);
    client.set_connection_timeout(30);
    client.set_read_timeout(60);
    std::string path = url.path;
    if (path.empty() || path.back() != '/') path += '/';
    path += "search";
    httplib::Params params{{"q", text}, {"format", "json"}, {"limit", "1"}};
    auto res = client.Get(path, params, httplib::Headers{{"User-Agent", "gridsynth"}});
    if (!res || res->status != 200) fail(Errc::NetworkError, "geocoder request failed for '" + text + "'");
    auto doc = nlohmann::json::parse(res->body, nullptr, false);
    if (!doc.is_array() || doc.empty()) fail(Errc::GeocodeUnavailable, "geocoder found nothing for '" + text + "'");
    const auto& hit = doc.front();
    auto num = [](const nlohmann::json& v) { return v.is_string() ? parse_double(v.get<std::string>()) : v.get<double>(); };
    GeocodeResult out;
    out.center = {num(hit.at("lat")), num(hit.at("lon"))};
    if (hit.contains("boundingbox") && hit["boundingbox"].size() == 4) {
      const auto& bb = hit["boundingbox"];
      out.bbox = BBox{num(bb[0]), num(bb[2]), num(bb[1]), num(bb[3])};
    }
    return out;
  };
}

FetchResult fetch_region(const RegionQuery& query, const std::string& endpoint, const RetryPolicy& retry,
                         const Geocoder& geocoder) {
  query.validate();
  RegionQuery resolved = query;
  if (query.kind == QueryKind::city || query.kind == QueryKind::address) {
    if (!geocoder) fail(Errc::GeocodeUnavailable, "no geocoder configured for text queries");
    const auto hit = geocoder(query.kind == QueryKind::city ? query.city_name : query.address);
    if (query.kind == QueryKind::city) {
      if (!hit.bbox) fail(Errc::GeocodeUnavailable, "geocoder returned no boundary for '" + query.city_name + "'");
      resolved = RegionQuery::box(*hit.bbox);
    } else {
      resolved = RegionQuery::point(hit.center, query.dist_m);
    }
  }
  const std::string ql = build_overpass_query(resolved);
  const auto url = split_url(endpoint);

  std::string last_error = "no attempt made";
  double wait = retry.backoff_s;
  for (int attempt = 1; attempt <= std::max(1, retry.max_attempts); ++attempt) {
    httplib::Client client(url.origin);
    client.set_connection_timeout(30);
    client.set_read_timeout(300);
    auto res = client.Post(url.path, httplib::Params{{"data", ql}});
    if (res && res->status == 200) {
      FetchResult out;
      out.raw = res->body;
      out.extract = parse_overpass_document(out.raw, endpoint);
      out.extract.provenance.retrieved_at = utc_now();
      return out;
    }
    last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    if (attempt < retry.max_attempts) {
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
      wait *= 2.0;
    }
  }
  fail(Errc::NetworkError, "Overpass request failed after " + std::to_string(retry.max_attempts) +
                               " attempts: " + last_error);
}

}  // namespace gridsynth::osm
