#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "fixtures.hpp"
#include "trajsim/commands.hpp"

using namespace trajsim;
using nlohmann::json;

namespace {

struct Cli {
  std::shared_ptr<SentinelTransport> sentinel = std::make_shared<SentinelTransport>();
  std::ostringstream out, err;

  int operator()(std::vector<std::string> args) {
    args.insert(args.begin(), "trajsim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), {sentinel, &out, &err});
  }
};

}  // namespace

TEST_CASE("the installed binary runs") {
  const std::string cmd = std::string(TRAJSIM_CLI) + " --version > /dev/null";
  const int status = std::system(cmd.c_str());
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
  const int bad = std::system((std::string(TRAJSIM_CLI) + " simulate 2> /dev/null").c_str());
  CHECK(WEXITSTATUS(bad) == kExitConfig);
}

TEST_CASE("full pipeline through the CLI") {
  fixtures::TempDir dir;
  const auto city = fixtures::write_city(dir.path(), 1200, 8);
  Cli cli;
  REQUIRE(cli({"gen-personas", "--stats", city.population, "--pois", city.pois, "--count", "4",
               "--seed", "3", "--out", dir.file("personas.jsonl")}) == kExitOk);

  json cfg = fixtures::sim_config(city, dir.file("out"), 4, 2, 3);
  cfg["paths"].erase("population_stats");
  cfg["paths"]["personas"] = dir.file("personas.jsonl");
  fixtures::write_json(dir.file("config.json"), cfg);
  REQUIRE(cli({"simulate", "--config", dir.file("config.json"), "--days", "1"}) == kExitOk);
  const auto manifest = json::parse(fixtures::read_file(dir.file("out/manifest.json")));
  CHECK(manifest["config"]["simulation"]["days"] == 1);

  REQUIRE(cli({"export-geojson", "--trace", dir.file("out/trace.jsonl"), "--out",
               dir.file("out/trace.geojson")}) == kExitOk);
  CHECK(json::parse(fixtures::read_file(dir.file("out/trace.geojson")))["features"].size() == 4);

  REQUIRE(cli({"metrics", "--trace", dir.file("out/trace.jsonl"), "--reference", city.checkins,
               "--pois", city.pois, "--out", dir.file("out/metrics.json")}) == kExitOk);
  const auto metrics = json::parse(fixtures::read_file(dir.file("out/metrics.json")));
  CHECK(metrics["ks_statistic_vs_reference"].is_number());
  CHECK(cli.sentinel->calls() == 0);
}

TEST_CASE("exit codes") {
  fixtures::TempDir dir;
  const auto city = fixtures::write_city(dir.path(), 600, 9);
  Cli cli;
  CHECK(cli({"simulate", "--config", dir.file("nope.json")}) == kExitConfig);

  json cfg = fixtures::sim_config(city, dir.file("out"), 2, 1, 1);
  cfg["simulation"]["agents"] = 0;
  fixtures::write_json(dir.file("zero.json"), cfg);
  CHECK(cli({"simulate", "--config", dir.file("zero.json")}) == kExitConfig);

  cfg = fixtures::sim_config(city, dir.file("out"), 2, 1, 1);
  {
    std::ofstream out(dir.file("broken.csv"));
    out << "poi_id,name,category,lat,lon\np1,A,Home,95,0\n";
  }
  cfg["paths"]["pois"] = dir.file("broken.csv");
  fixtures::write_json(dir.file("broken.json"), cfg);
  CHECK(cli({"simulate", "--config", dir.file("broken.json")}) == kExitData);
  CHECK(cli.err.str().find("line 2") != std::string::npos);

  CHECK(cli({"metrics", "--trace", dir.file("missing.jsonl"), "--out", dir.file("m.json")}) ==
        kExitData);
  CHECK(cli({"metrics", "--trace", dir.file("x"), "--reference", city.checkins, "--out",
             dir.file("m.json")}) == kExitConfig);
  CHECK(cli({"frobnicate"}) == kExitConfig);
}

TEST_CASE("networked model is refused by the sentinel") {
  fixtures::TempDir dir;
  const auto city = fixtures::write_city(dir.path(), 600, 10);
  json cfg = fixtures::sim_config(city, dir.file("out"), 1, 1, 1);
  cfg["destination"] = {{"strategy", "llm"}};
  fixtures::write_json(dir.file("config.json"), cfg);
  Cli cli;
  // Every call fails and falls back, so the run still completes.
  CHECK(cli({"simulate", "--config", dir.file("config.json")}) == kExitOk);
  CHECK(cli.sentinel->calls() > 0);
  const auto trace = fixtures::read_file(dir.file("out/trace.jsonl"));
  CHECK(trace.find("destination_llm_error") != std::string::npos);
}
