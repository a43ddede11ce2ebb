#include "fixtures.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fixtures {

namespace fs = std::filesystem;
using nlohmann::json;
using trajsim::Checkin;
using trajsim::GeoPoint;
using trajsim::Poi;
using trajsim::Rng;

TempDir::TempDir(const std::string& tag) {
  static std::uint64_t counter = 0;
  const auto stamp = static_cast<std::uint64_t>(
      std::chrono::steady_clock::now().time_since_epoch().count());
  path_ = fs::temp_directory_path() /
          (tag + "_" + std::to_string(trajsim::mix64(stamp ^ ++counter) % 1000000007));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

const std::vector<std::pair<std::string, int>>& city_categories() {
  static const std::vector<std::pair<std::string, int>> mix = {
      {"Home", 40},      {"Office", 12},     {"School", 4},
      {"Cafe", 8},       {"Casual Dining", 6}, {"Restaurant", 8},
      {"Supermarket", 4}, {"Convenience Store", 3}, {"Shopping Mall", 1},
      {"Park", 4},       {"Cinema", 1},      {"Bar", 3},
      {"Museum", 1},     {"Gym", 2},         {"Bank", 1},
      {"Post Office", 1}, {"Pharmacy", 1},
  };
  return mix;
}

std::vector<Poi> make_city(std::size_t n, std::uint64_t seed) {
  const auto& mix = city_categories();
  if (n < mix.size()) throw std::invalid_argument("make_city: too few POIs");
  Rng rng(seed);
  std::vector<Poi> pois;
  pois.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string category;
    if (i < mix.size()) {
      category = mix[i].first;
    } else {
      std::uint64_t pick = rng.below(100);
      for (const auto& [name, weight] : mix) {
        if (pick < static_cast<std::uint64_t>(weight)) {
          category = name;
          break;
        }
        pick -= static_cast<std::uint64_t>(weight);
      }
    }
    const double lat = 48.80 + 0.10 * rng.uniform();
    const double lon = 2.28 + 0.15 * rng.uniform();
    const double attraction = std::round((0.5 + 1.5 * rng.uniform()) * 1000.0) / 1000.0;
    char id[16];
    std::snprintf(id, sizeof id, "p%05zu", i);
    pois.push_back(Poi{id, category + " " + std::to_string(i), category,
                       GeoPoint(std::round(lat * 1e6) / 1e6, std::round(lon * 1e6) / 1e6),
                       attraction});
  }
  return pois;
}

std::vector<Checkin> make_checkins(const std::vector<Poi>& pois, std::size_t users,
                                   std::size_t per_user, std::uint64_t seed) {
  std::vector<const Poi*> venues;
  for (const Poi& p : pois) {
    if (p.category != "Home") venues.push_back(&p);
  }
  // Popularity ~ 1 / (rank + 1) over a seeded shuffle.
  Rng rng(seed);
  for (std::size_t i = venues.size(); i > 1; --i) {
    std::swap(venues[i - 1], venues[rng.below(i)]);
  }
  std::vector<double> cumulative(venues.size());
  double total = 0.0;
  for (std::size_t i = 0; i < venues.size(); ++i) {
    total += 1.0 / static_cast<double>(i + 1);
    cumulative[i] = total;
  }
  const std::int64_t jan_2024 = 1704067200;
  std::vector<Checkin> out;
  out.reserve(users * per_user);
  for (std::size_t u = 0; u < users; ++u) {
    std::int64_t t = jan_2024 + static_cast<std::int64_t>(rng.below(86400));
    for (std::size_t k = 0; k < per_user; ++k) {
      const double x = rng.uniform() * total;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
      if (it == cumulative.end()) --it;
      const Poi* p = venues[static_cast<std::size_t>(it - cumulative.begin())];
      t += 600 + static_cast<std::int64_t>(rng.below(6 * 3600));
      out.push_back(Checkin{"u" + std::to_string(u), p->id, t, p->category});
    }
  }
  return out;
}

namespace {

std::string iso8601(std::int64_t t) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{t}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()),
                static_cast<long>(hms.hours().count()),
                static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

}  // namespace

void write_pois_csv(const std::string& path, const std::vector<Poi>& pois) {
  std::ofstream out(path);
  out.precision(17);
  out << "poi_id,name,category,lat,lon,attraction\n";
  for (const Poi& p : pois) {
    out << p.id << ",\"" << p.name << "\"," << p.category << ',' << p.location.lat() << ','
        << p.location.lon() << ',' << p.attraction << '\n';
  }
}

void write_checkins_csv(const std::string& path, const std::vector<Checkin>& checkins) {
  std::ofstream out(path);
  out << "user_id,poi_id,timestamp,category\n";
  for (const Checkin& c : checkins) {
    out << c.user_id << ',' << c.poi_id << ',' << iso8601(c.timestamp) << ','
        << c.category << '\n';
  }
}

json population_stats_json() {
  return json::parse(R"({
    "age_buckets": [["18-29", 0.25], ["30-44", 0.30], ["45-64", 0.30], ["65+", 0.15]],
    "genders": [["female", 0.51], ["male", 0.49]],
    "employment": [["employee", 0.55], ["student", 0.15], ["unemployed", 0.10], ["retired", 0.20]],
    "occupations_by_employment": {
      "employee": [["engineer", 0.3], ["clerk", 0.3], ["nurse", 0.2], ["teacher", 0.2]],
      "student": [["university student", 0.7], ["high school student", 0.3]],
      "unemployed": [["job seeker", 0.6], ["homemaker", 0.4]],
      "retired": [["retiree", 1.0]]
    }
  })");
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CityFiles write_city(const fs::path& dir, std::size_t n_pois, std::uint64_t seed) {
  CityFiles files{(dir / "pois.csv").string(), (dir / "checkins.csv").string(),
                  (dir / "population.json").string()};
  const auto pois = make_city(n_pois, seed);
  write_pois_csv(files.pois, pois);
  write_checkins_csv(files.checkins, make_checkins(pois, 200, 25, seed + 1));
  write_json(files.population, population_stats_json());
  return files;
}

json sim_config(const CityFiles& city, const std::string& out_dir, int agents, int days,
                std::uint64_t seed) {
  return {
      {"simulation", {{"seed", seed}, {"agents", agents}, {"days", days}, {"workers", 1}}},
      {"paths",
       {{"pois", city.pois},
        {"checkins", city.checkins},
        {"population_stats", city.population},
        {"out", out_dir}}},
  };
}

GeoPoint offset_north(const GeoPoint& origin, double km) {
  const double dlat = km / 6371.0 * 180.0 / std::numbers::pi;
  return GeoPoint(origin.lat() + dlat, origin.lon());
}

std::map<std::string, std::uint64_t> exact_counts(const std::vector<std::string>& stream) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& s : stream) ++counts[s];
  return counts;
}

namespace {

double great_circle_km(double lat1, double lon1, double lat2, double lon2) {
  const double rad = std::numbers::pi / 180.0;
  const double a = std::pow(std::sin((lat2 - lat1) * rad / 2.0), 2) +
                   std::cos(lat1 * rad) * std::cos(lat2 * rad) *
                       std::pow(std::sin((lon2 - lon1) * rad / 2.0), 2);
  return 2.0 * 6371.0 * std::asin(std::sqrt(std::min(1.0, a)));
}

}  // namespace

std::vector<double> oracle_probabilities(const OracleInput& in) {
  const std::size_t n = in.lat.size();

  // Spatial interaction: attraction times (or over) the impedance.
  std::vector<double> ws(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = great_circle_km(in.lat0, in.lon0, in.lat[i], in.lon[i]);
    double f = std::pow(d + in.r0, -in.beta);
    if (std::isfinite(in.k)) f *= std::exp(-d / in.k);
    ws[i] = in.divide ? in.attraction[i] / f : in.attraction[i] * f;
  }

  // Quantile mapping by counting, then the distribution map.
  std::vector<double> z(n);
  const std::size_t m = in.target.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (m == 0) {
      z[i] = in.frequency[i];
      continue;
    }
    std::size_t rank = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (in.frequency[j] <= in.frequency[i]) ++rank;
    }
    std::size_t index = (rank * m) / n;
    if (index * n == rank * m) --index;  // exact quantile lands on a step
    z[i] = in.target[index];
  }
  for (double& v : z) v = in.log1p ? std::log1p(v) : v;

  double sum_z = 0.0;
  for (double v : z) sum_z += v;
  std::vector<double> wf(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double share = sum_z > 0.0 ? z[i] / sum_z : 1.0 / static_cast<double>(n);
    wf[i] = (1.0 - in.sigma) * share + in.sigma / static_cast<double>(n);
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += ws[i] * wf[i];
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = ws[i] * wf[i] / total;
  return p;
}

}  // namespace fixtures
