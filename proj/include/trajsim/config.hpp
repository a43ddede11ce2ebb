#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "trajsim/activity.hpp"
#include "trajsim/destination.hpp"
#include "trajsim/llm_adapter.hpp"
#include "trajsim/memory.hpp"
#include "trajsim/persona.hpp"

namespace trajsim {

struct SimPaths {
  std::string pois;
  std::string checkins;          // optional
  std::string personas;          // optional if population_stats is set
  std::string population_stats;  // optional if personas is set
  std::string out = "out";
};

// Whole-run configuration. Read from a JSON file whose sections mirror the
// dotted key names (`impedance.r0_km`, `frequency.sigma`, ...). Relative paths
// resolve against the config file's directory. Unknown keys are rejected.
struct SimConfig {
  std::uint64_t seed = 1;
  int agents = 10;
  int days = 1;
  int day_start_minutes = 0;
  int workers = 1;
  SimPaths paths;

  bool attraction_from_checkins = false;
  PhysicalModelParams physical;
  DestinationStrategy strategy = DestinationStrategy::Physical;
  double radius_km = 3.0;
  std::map<std::string, double, std::less<>> radius_by_category;
  std::size_t llm_max_candidates = 30;
  ActivityEngine engine = ActivityEngine::Template;
  PersonaConfig persona;
  MemoryParams memory;
  LlmConfig llm;
  std::string llm_mock_script;  // JSON array of canned replies; offline LLM

  bool uses_llm() const noexcept {
    return strategy == DestinationStrategy::Llm || engine == ActivityEngine::Llm;
  }

  // Throws ConfigError.
  void validate() const;

  // Accepts either a config object or a run manifest carrying one under
  // "config".
  static SimConfig from_json(const nlohmann::json& j, const std::string& base_dir);
  static SimConfig load(const std::string& path);

  // Canonical form with every key present; paths as stored.
  nlohmann::json to_json() const;
};

// Reads a JSON array of reply strings.
std::vector<std::string> load_mock_script(const std::string& path);

}  // namespace trajsim
