#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajsim/poi_store.hpp"
#include "trajsim/rng.hpp"

namespace fixtures {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "trajsim");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// Category mix of the synthetic city, weights in percent.
const std::vector<std::pair<std::string, int>>& city_categories();

// n POIs scattered over a ~11 km square around (48.85, 2.35). Every category
// gets at least one POI. Attractions are uniform in [0.5, 2].
std::vector<trajsim::Poi> make_city(std::size_t n, std::uint64_t seed);

// `users` users with `per_user` check-ins each on non-home POIs, Zipf-ish
// popularity, timestamps spread over January 2024.
std::vector<trajsim::Checkin> make_checkins(const std::vector<trajsim::Poi>& pois,
                                            std::size_t users, std::size_t per_user,
                                            std::uint64_t seed);

void write_pois_csv(const std::string& path, const std::vector<trajsim::Poi>& pois);
void write_checkins_csv(const std::string& path,
                        const std::vector<trajsim::Checkin>& checkins);

nlohmann::json population_stats_json();
void write_json(const std::string& path, const nlohmann::json& j);
std::string read_file(const std::string& path);

// A ready-to-run city: pois.csv, checkins.csv, population.json in `dir`.
struct CityFiles {
  std::string pois;
  std::string checkins;
  std::string population;
};
CityFiles write_city(const std::filesystem::path& dir, std::size_t n_pois,
                     std::uint64_t seed);

// Minimal simulate config over a written city.
nlohmann::json sim_config(const CityFiles& city, const std::string& out_dir,
                          int agents, int days, std::uint64_t seed);

// Point `km` kilometres due north of `origin` (along its meridian).
trajsim::GeoPoint offset_north(const trajsim::GeoPoint& origin, double km);

// ---------------------------------------------------------------------------
// Oracles

// Exact per-item counts of a stream.
std::map<std::string, std::uint64_t> exact_counts(const std::vector<std::string>& stream);

struct OracleInput {
  double lat0, lon0;                 // current position
  std::vector<double> lat, lon;      // candidates
  std::vector<double> attraction;
  std::vector<double> frequency;     // raw counts per candidate
  std::vector<double> target;        // sorted ECDF sample; empty = identity
  double r0, beta, k;                // k may be +inf
  bool divide = false;
  bool log1p = false;
  double sigma = 0.1;
};

// Selection probabilities written out directly from the model formulas.
std::vector<double> oracle_probabilities(const OracleInput& in);

}  // namespace fixtures
