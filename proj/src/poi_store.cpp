#include "trajsim/poi_store.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "csv.hpp"
#include "trajsim/errors.hpp"

namespace trajsim {

namespace {

constexpr double kKmPerDegree = std::numbers::pi * kEarthRadiusKm / 180.0;

std::string at_line(std::size_t line_no) {
  return "line " + std::to_string(line_no) + ": ";
}

}  // namespace

PoiStore::PoiStore(std::vector<Poi> pois) : pois_(std::move(pois)) {
  for (std::size_t i = 0; i < pois_.size(); ++i) {
    const Poi& poi = pois_[i];
    if (!(poi.attraction > 0.0) || !std::isfinite(poi.attraction)) {
      throw DataError("POI '" + poi.id + "': attraction must be > 0");
    }
    if (!by_id_.emplace(poi.id, i).second) {
      throw DataError("duplicate poi_id '" + poi.id + "'");
    }
    grid_[cell_key(cell_row(poi.location.lat()), cell_col(poi.location.lon()))]
        .push_back(i);
    by_category_[poi.category].push_back(i);
    categories_.insert(poi.category);
  }
  for (auto& [category, indices] : by_category_) {
    std::sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
      return pois_[a].id < pois_[b].id;
    });
  }
}

PoiStore::CellKey PoiStore::cell_key(std::int64_t row,
                                     std::int64_t col) noexcept {
  return row * 100000 + col;
}

std::int64_t PoiStore::cell_row(double lat) noexcept {
  return static_cast<std::int64_t>(std::floor(lat / kCellDegrees));
}

std::int64_t PoiStore::cell_col(double lon) noexcept {
  return static_cast<std::int64_t>(std::floor(lon / kCellDegrees));
}

bool PoiStore::has_category(std::string_view category) const {
  return by_category_.find(category) != by_category_.end();
}

const Poi* PoiStore::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &pois_[it->second];
}

std::vector<const Poi*> PoiStore::of_category(std::string_view category) const {
  std::vector<const Poi*> out;
  auto it = by_category_.find(category);
  if (it == by_category_.end()) return out;
  out.reserve(it->second.size());
  for (std::size_t i : it->second) out.push_back(&pois_[i]);
  return out;
}

std::size_t PoiStore::indexed_count() const noexcept {
  std::size_t total = 0;
  for (const auto& [key, cell] : grid_) total += cell.size();
  return total;
}

std::vector<const Poi*> PoiStore::query_radius(const GeoPoint& center,
                                               double radius_km,
                                               std::string_view category) const {
  std::vector<std::pair<double, const Poi*>> hits;
  auto category_it = by_category_.find(category);
  if (category_it == by_category_.end() || !(radius_km > 0.0)) return {};

  auto consider = [&](std::size_t index) {
    const Poi& poi = pois_[index];
    if (poi.category != category) return;
    const double d = haversine(center, poi.location);
    if (d <= radius_km) hits.emplace_back(d, &poi);
  };

  // Bounding box of the spherical cap; fall back to scanning the category
  // when the cap reaches a pole or the box would touch more cells than the
  // category has POIs.
  const double angular = radius_km / kEarthRadiusKm;
  const double dlat = radius_km / kKmPerDegree;
  const double cos_lat = std::cos(center.lat() * std::numbers::pi / 180.0);
  bool scan_category = angular >= std::numbers::pi / 2 ||
                       std::sin(angular) >= cos_lat ||
                       std::abs(center.lat()) + dlat >= 90.0;
  std::int64_t row_lo = 0, row_hi = 0, col_lo = 0, col_hi = 0;
  if (!scan_category) {
    const double dlon =
        std::asin(std::sin(angular) / cos_lat) * 180.0 / std::numbers::pi;
    row_lo = cell_row(center.lat() - dlat) - 1;
    row_hi = cell_row(center.lat() + dlat) + 1;
    col_lo = cell_col(std::max(-180.0, center.lon() - dlon)) - 1;
    col_hi = cell_col(std::min(180.0, center.lon() + dlon)) + 1;
    const double cells = static_cast<double>(row_hi - row_lo + 1) *
                         static_cast<double>(col_hi - col_lo + 1);
    scan_category = cells > static_cast<double>(category_it->second.size());
  }

  if (scan_category) {
    for (std::size_t i : category_it->second) consider(i);
  } else {
    for (std::int64_t row = row_lo; row <= row_hi; ++row) {
      for (std::int64_t col = col_lo; col <= col_hi; ++col) {
        auto cell = grid_.find(cell_key(row, col));
        if (cell == grid_.end()) continue;
        for (std::size_t i : cell->second) consider(i);
      }
    }
  }

  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second->id < b.second->id;
  });
  std::vector<const Poi*> out;
  out.reserve(hits.size());
  for (const auto& hit : hits) out.push_back(hit.second);
  return out;
}

CheckinLog::CheckinLog(std::vector<Checkin> records)
    : records_(std::move(records)) {
  for (const Checkin& c : records_) ++per_poi_counts_[c.poi_id];
}

PoiStore load_pois(std::istream& in) {
  std::string line;
  if (!csv::read_line(in, line)) return PoiStore{};
  const csv::Header header(csv::split_row(line));
  const std::size_t c_id = header.require("poi_id");
  const std::size_t c_name = header.require("name");
  const std::size_t c_category = header.require("category");
  const std::size_t c_lat = header.require("lat");
  const std::size_t c_lon = header.require("lon");
  const auto c_attraction = header.find("attraction");

  std::vector<Poi> pois;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t line_no = 1;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = csv::split_row(line);
    auto field = [&](std::size_t column, std::string_view name) -> const std::string& {
      if (column >= fields.size()) {
        throw DataError(at_line(line_no) + "field '" + std::string(name) +
                        "': missing");
      }
      return fields[column];
    };

    Poi poi;
    poi.id = field(c_id, "poi_id");
    if (poi.id.empty()) throw DataError(at_line(line_no) + "field 'poi_id': empty");
    poi.name = field(c_name, "name");
    poi.category = field(c_category, "category");
    if (poi.category.empty()) {
      throw DataError(at_line(line_no) + "field 'category': empty");
    }
    const double lat = csv::parse_double(field(c_lat, "lat"), line_no, "lat");
    const double lon = csv::parse_double(field(c_lon, "lon"), line_no, "lon");
    try {
      poi.location = GeoPoint(lat, lon);
    } catch (const std::out_of_range& e) {
      throw DataError(at_line(line_no) + "coordinate out of range: " + e.what());
    }
    if (c_attraction && *c_attraction < fields.size() &&
        !fields[*c_attraction].empty()) {
      poi.attraction =
          csv::parse_double(fields[*c_attraction], line_no, "attraction");
      if (!(poi.attraction > 0.0)) {
        throw DataError(at_line(line_no) + "field 'attraction': must be > 0");
      }
    }
    if (auto [it, fresh] = seen.emplace(poi.id, line_no); !fresh) {
      throw DataError(at_line(line_no) + "duplicate poi_id '" + poi.id +
                      "' (first seen on line " + std::to_string(it->second) +
                      ")");
    }
    pois.push_back(std::move(poi));
  }
  return PoiStore(std::move(pois));
}

PoiStore load_pois_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open POI file '" + path + "'");
  return load_pois(in);
}

std::int64_t parse_iso8601(std::string_view text) {
  auto fail = [&]() -> std::invalid_argument {
    return std::invalid_argument("bad ISO-8601 timestamp '" + std::string(text) +
                                 "'");
  };
  std::size_t pos = 0;
  auto number = [&](std::size_t digits) -> int {
    if (pos + digits > text.size()) throw fail();
    int value = 0;
    auto [ptr, ec] =
        std::from_chars(text.data() + pos, text.data() + pos + digits, value);
    if (ec != std::errc() || ptr != text.data() + pos + digits) throw fail();
    pos += digits;
    return value;
  };
  auto expect = [&](char c) {
    if (pos >= text.size() || text[pos] != c) throw fail();
    ++pos;
  };

  const int year = number(4);
  expect('-');
  const int month = number(2);
  expect('-');
  const int day = number(2);
  if (pos >= text.size() || (text[pos] != 'T' && text[pos] != ' ')) throw fail();
  ++pos;
  const int hour = number(2);
  expect(':');
  const int minute = number(2);
  expect(':');
  const int second = number(2);
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    if (pos == start) throw fail();
  }
  int offset_seconds = 0;
  if (pos < text.size()) {
    if (text[pos] == 'Z') {
      ++pos;
    } else if (text[pos] == '+' || text[pos] == '-') {
      const int sign = text[pos] == '+' ? 1 : -1;
      ++pos;
      const int oh = number(2);
      expect(':');
      const int om = number(2);
      if (oh > 23 || om > 59) throw fail();
      offset_seconds = sign * (oh * 3600 + om * 60);
    }
  }
  if (pos != text.size()) throw fail();
  if (hour > 23 || minute > 59 || second > 60) throw fail();

  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year},
                           std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) throw fail();
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days_since_epoch) * 86400 + hour * 3600 +
         minute * 60 + second - offset_seconds;
}

CheckinLog load_checkins(std::istream& in) {
  std::string line;
  if (!csv::read_line(in, line)) return CheckinLog{};
  const csv::Header header(csv::split_row(line));
  const std::size_t c_user = header.require("user_id");
  const std::size_t c_poi = header.require("poi_id");
  const std::size_t c_time = header.require("timestamp");
  const std::size_t c_category = header.require("category");
  const std::size_t needed = std::max({c_user, c_poi, c_time, c_category}) + 1;

  std::vector<Checkin> records;
  std::size_t line_no = 1;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = csv::split_row(line);
    if (fields.size() < needed) {
      throw DataError(at_line(line_no) + "expected at least " +
                      std::to_string(needed) + " fields, got " +
                      std::to_string(fields.size()));
    }
    Checkin c;
    c.user_id = fields[c_user];
    c.poi_id = fields[c_poi];
    c.category = fields[c_category];
    try {
      c.timestamp = parse_iso8601(fields[c_time]);
    } catch (const std::invalid_argument& e) {
      throw DataError(at_line(line_no) + "field 'timestamp': " + e.what());
    }
    records.push_back(std::move(c));
  }
  return CheckinLog(std::move(records));
}

CheckinLog load_checkins_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open check-in file '" + path + "'");
  return load_checkins(in);
}

PoiStore with_checkin_attraction(const PoiStore& store, const CheckinLog& log) {
  std::vector<Poi> pois(store.pois().begin(), store.pois().end());
  if (pois.empty()) return PoiStore(std::move(pois));
  double total = 0.0;
  for (const Poi& poi : pois) {
    auto it = log.per_poi_counts().find(poi.id);
    if (it != log.per_poi_counts().end()) total += static_cast<double>(it->second);
  }
  const double mean = total / static_cast<double>(pois.size());
  for (Poi& poi : pois) {
    auto it = log.per_poi_counts().find(poi.id);
    const double count =
        it == log.per_poi_counts().end() ? 0.0 : static_cast<double>(it->second);
    poi.attraction = (1.0 + count) / (1.0 + mean);
  }
  return PoiStore(std::move(pois));
}

}  // namespace trajsim
