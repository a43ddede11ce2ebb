#include <doctest.h>

#include <fstream>

#include "fixtures.hpp"
#include "trajsim/errors.hpp"
#include "trajsim/sim_runner.hpp"

using namespace trajsim;
using nlohmann::json;

namespace {

SimConfig config_for(const fixtures::CityFiles& city, const std::string& out, int agents,
                     int days) {
  return SimConfig::from_json(fixtures::sim_config(city, out, agents, days, 42), "");
}

}  // namespace

TEST_CASE("simulation writes sorted, valid traces and a manifest") {
  fixtures::TempDir dir;
  const auto city = fixtures::write_city(dir.path(), 1500, 3);
  const SimConfig cfg = config_for(city, dir.file("out"), 10, 1);
  const RunResult r = run_simulation(cfg);
  CHECK(r.agent_days == 10);
  CHECK(r.failed_agent_days == 0);

  const auto records = read_trace(r.trace_path);
  CHECK(records.size() == r.records);
  const PoiStore store = load_pois_file(city.pois);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    CHECK(rec.end > rec.start);
    CHECK(rec.end <= 1440);
    const Poi* poi = store.find(rec.poi_id);
    REQUIRE(poi != nullptr);
    CHECK(poi->category == rec.category);
    CHECK(poi->location.lat() == rec.lat);
    if (i > 0) {
      const auto& prev = records[i - 1];
      CHECK(std::tie(prev.agent_id, prev.day, prev.start) <
            std::tie(rec.agent_id, rec.day, rec.start));
    }
  }
  CHECK(export_geojson(records)["features"].size() == 10);

  std::ifstream in(r.manifest_path);
  const json manifest = json::parse(in);
  CHECK(manifest.at("trace_hash") == r.trace_hash);
  CHECK(manifest.at("seed") == 42);

  // Re-running from the manifest reproduces the trace.
  SimConfig again = SimConfig::from_json(manifest, "");
  again.paths.out = dir.file("again");
  CHECK(run_simulation(again).trace_hash == r.trace_hash);
}

TEST_CASE("worker count does not change the trace") {
  fixtures::TempDir dir;
  const auto city = fixtures::write_city(dir.path(), 1500, 4);
  SimConfig a = config_for(city, dir.file("a"), 6, 2);
  SimConfig b = a;
  b.workers = 3;
  b.paths.out = dir.file("b");
  CHECK(fixtures::read_file(run_simulation(a).trace_path) ==
        fixtures::read_file(run_simulation(b).trace_path));
}

TEST_CASE("failed agent-days are isolated") {
  fixtures::TempDir dir;
  const auto city = fixtures::write_city(dir.path(), 800, 5);
  const PoiStore store = load_pois_file(city.pois);
  const auto stats = PopulationStats::from_json(fixtures::population_stats_json());
  PersonaGenOptions gen;
  gen.count = 3;
  auto personas = generate_personas(stats, store, gen);
  personas[1].activity_locations.entries = {{"sleep", {"Home"}}, {"meal", {"Ghost Town"}}};
  write_personas(dir.file("personas.jsonl"), personas);

  SimConfig cfg = config_for(city, dir.file("out"), 3, 2);
  cfg.paths.personas = dir.file("personas.jsonl");
  const RunResult r = run_simulation(cfg);
  CHECK(r.failed_agent_days == 2);
  for (const auto& rec : read_trace(r.trace_path)) CHECK(rec.agent_id != personas[1].id);
  CHECK(fixtures::read_file(r.failures_path).find("Ghost Town") != std::string::npos);
}

TEST_CASE("startup failures write nothing") {
  fixtures::TempDir dir;
  const auto city = fixtures::write_city(dir.path(), 800, 6);
  SimConfig cfg = config_for(city, dir.file("out"), 3, 1);
  cfg.paths.pois = dir.file("missing.csv");
  CHECK_THROWS_AS(run_simulation(cfg), DataError);
  CHECK_FALSE(std::filesystem::exists(dir.file("out")));
  cfg = config_for(city, dir.file("out"), 0, 1);
  CHECK_THROWS_AS(run_simulation(cfg), ConfigError);
}

TEST_CASE("persona files round trip") {
  fixtures::TempDir dir;
  const PoiStore store(fixtures::make_city(500, 1));
  const auto stats = PopulationStats::from_json(fixtures::population_stats_json());
  PersonaGenOptions gen;
  gen.count = 12;
  gen.seed = 5;
  const auto personas = generate_personas(stats, store, gen);
  CHECK(personas[11].id == "agent_0011");
  write_personas(dir.file("p.jsonl"), personas);
  const auto back = read_personas(dir.file("p.jsonl"));
  REQUIRE(back.size() == personas.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(to_json(back[i]) == to_json(personas[i]));
  // substreams: persona i does not depend on the count
  gen.count = 3;
  CHECK(to_json(generate_personas(stats, store, gen)[2]) == to_json(personas[2]));
}

TEST_CASE("trace parsing errors carry line numbers") {
  fixtures::TempDir dir;
  {
    std::ofstream out(dir.file("t.jsonl"));
    out << R"({"agent_id":"a","day":0,"start":0,"end":5,"activity":"x","category":"c","poi_id":"p","lat":1,"lon":1,"fallback_flags":[]})"
        << "\n{\"agent_id\": 3}\n";
  }
  try {
    read_trace(dir.file("t.jsonl"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("GeoJSON export") {
  CHECK(export_geojson({})["features"].empty());
  const std::vector<TraceRecord> one = {{"a", 0, 0, 1440, "sleep", "Home", "h", 1.0, 2.0, {}}};
  const json g = export_geojson(one);
  const auto& coords = g["features"][0]["geometry"]["coordinates"];
  CHECK(coords.size() == 2);
  CHECK(coords[0] == json::array({2.0, 1.0}));
  CHECK(coords[1] == coords[0]);
  CHECK(g["features"][0]["properties"]["agent_id"] == "a");
}

TEST_CASE("metrics") {
  const GeoPoint a(10, 10);
  const GeoPoint b = fixtures::offset_north(a, 2.0);
  const std::vector<TraceRecord> two = {
      {"x", 0, 0, 600, "sleep", "Home", "h", a.lat(), a.lon(), {}},
      {"x", 0, 600, 1440, "work", "Office", "o", b.lat(), b.lon(), {}},
  };
  const MetricsReport m = compute_metrics(two);
  REQUIRE(m.jump_lengths.size() == 1);
  CHECK(m.jump_lengths[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(m.radius_of_gyration.at("x") == doctest::Approx(1.0).epsilon(1e-3));
  std::uint64_t binned = 0;
  for (auto c : m.jump_histogram.counts) binned += c;
  CHECK(binned == m.jump_lengths.size());
  CHECK(m.category_histogram.at("Home") == 1);
  CHECK_FALSE(m.ks_statistic_vs_reference.has_value());

  const std::vector<double> x = {1, 2, 2, 5};
  CHECK(ks_statistic(x, x) == 0.0);
  CHECK(ks_statistic({0, 0}, {1, 1}) == 1.0);
  CHECK(ks_statistic({1, 2, 3, 4}, {3, 4, 5, 6}) == doctest::Approx(0.5));
  const std::vector<GeoPoint> still = {a, a, a};
  CHECK(radius_of_gyration(still) == 0.0);
  const auto j = to_json(m);
  CHECK(j.at("ks_statistic_vs_reference").is_null());
  CHECK(j.at("jump_length_histogram_km").at("edges").back() == "inf");
}
