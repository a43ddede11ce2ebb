#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "trajsim/geo.hpp"

namespace trajsim {

struct Poi {
  std::string id;
  std::string name;
  std::string category;
  GeoPoint location;
  double attraction = 1.0;
};

// Immutable after construction; safe for concurrent reads.
//
// POIs are bucketed into a fixed 0.01 x 0.01 degree grid. A radius query
// visits every cell intersecting the query's lat/lon bounding box and then
// filters by exact haversine distance. Longitude wraparound at the
// antimeridian is not handled: boxes are clamped to [-180, 180].
class PoiStore {
 public:
  static constexpr double kCellDegrees = 0.01;

  PoiStore() = default;
  // Throws DataError on duplicate ids or non-positive attraction.
  explicit PoiStore(std::vector<Poi> pois);

  std::span<const Poi> pois() const noexcept { return pois_; }
  std::size_t size() const noexcept { return pois_.size(); }
  const std::set<std::string>& categories() const noexcept {
    return categories_;
  }
  bool has_category(std::string_view category) const;

  const Poi* find(std::string_view id) const;
  // All POIs of a category in id order.
  std::vector<const Poi*> of_category(std::string_view category) const;

  // POIs of `category` within `radius_km` of `center`, ordered by ascending
  // distance and then id.
  std::vector<const Poi*> query_radius(const GeoPoint& center, double radius_km,
                                       std::string_view category) const;

  // Total number of POI slots across grid cells (equals size()).
  std::size_t indexed_count() const noexcept;

 private:
  using CellKey = std::int64_t;
  static CellKey cell_key(std::int64_t row, std::int64_t col) noexcept;
  static std::int64_t cell_row(double lat) noexcept;
  static std::int64_t cell_col(double lon) noexcept;

  std::vector<Poi> pois_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<CellKey, std::vector<std::size_t>> grid_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_category_;
  std::set<std::string> categories_;
};

struct Checkin {
  std::string user_id;
  std::string poi_id;
  std::int64_t timestamp = 0;  // seconds since the Unix epoch, UTC
  std::string category;
};

class CheckinLog {
 public:
  CheckinLog() = default;
  explicit CheckinLog(std::vector<Checkin> records);

  const std::vector<Checkin>& records() const noexcept { return records_; }
  const std::map<std::string, std::uint64_t>& per_poi_counts() const noexcept {
    return per_poi_counts_;
  }

 private:
  std::vector<Checkin> records_;
  std::map<std::string, std::uint64_t> per_poi_counts_;
};

// CSV with header `poi_id,name,category,lat,lon[,attraction]`.
PoiStore load_pois(std::istream& in);
PoiStore load_pois_file(const std::string& path);

// CSV with header `user_id,poi_id,timestamp,category`; extra columns ignored.
CheckinLog load_checkins(std::istream& in);
CheckinLog load_checkins_file(const std::string& path);

// Parses `YYYY-MM-DD[T ]HH:MM:SS[.fff][Z|(+|-)HH:MM]` into UTC epoch seconds.
// Throws std::invalid_argument on anything else.
std::int64_t parse_iso8601(std::string_view text);

// Replaces every POI's attraction with (1 + count) / (1 + mean count), where
// count is the POI's check-in multiplicity.
PoiStore with_checkin_attraction(const PoiStore& store, const CheckinLog& log);

}  // namespace trajsim
