#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajsim/poi_store.hpp"
#include "trajsim/rng.hpp"

namespace trajsim {

class LlmAdapter;

// Discrete distribution over labels. Order is preserved and determines how
// draws map onto labels.
struct LabelDistribution {
  std::vector<std::pair<std::string, double>> entries;

  // Probabilities >= 0 summing to 1 +- 1e-9. Throws ConfigError.
  void validate(std::string_view what) const;
  const std::string& sample(Rng& rng) const;
  bool contains(std::string_view label) const;
};

struct PopulationStats {
  LabelDistribution age_buckets;
  LabelDistribution genders;
  LabelDistribution employment;
  std::map<std::string, LabelDistribution, std::less<>> occupations_by_employment;

  // Also checks every employment label has an occupation row.
  void validate() const;

  // Each distribution is an array of [label, probability] pairs:
  //   {"age_buckets": [["18-29", 0.3], ...], "genders": [...],
  //    "employment": [...], "occupations_by_employment": {"employee": [...]}}
  static PopulationStats from_json(const nlohmann::json& j);
  static PopulationStats load(const std::string& path);
};

// Daily routine structure used by the template engines.
enum class Role { Employee, Student, Unemployed, Retired };

std::string_view to_string(Role role);

struct PersonaConfig {
  std::string home_category = "Home";
  std::string work_category = "Office";
  std::string school_category = "School";
  double commute_radius_km = 10.0;
  std::vector<std::string> employee_labels = {"employee"};
  std::vector<std::string> student_labels = {"student"};
  std::vector<std::string> retired_labels = {"retired"};

  Role role_of(std::string_view employment) const;
  // Work or school category for roles that have one.
  std::optional<std::string> anchor_category(Role role) const;
};

struct BigFive {
  double openness = 0.5;
  double conscientiousness = 0.5;
  double extraversion = 0.5;
  double agreeableness = 0.5;
  double neuroticism = 0.5;
};

// Activity label -> candidate location categories, in preference order.
struct ActivityLocationList {
  std::map<std::string, std::vector<std::string>> entries;

  bool contains(std::string_view activity) const;
  bool allows(std::string_view activity, std::string_view category) const;
  const std::vector<std::string>& categories_for(std::string_view activity) const;
};

struct Persona {
  std::string id;
  std::string age_bucket;
  std::string gender;
  std::string employment;
  std::string occupation;
  BigFive big_five;
  std::string home_poi;
  std::optional<std::string> anchor_poi;  // workplace or school
  ActivityLocationList activity_locations;
  std::string goals;
};

inline constexpr int kPersonaSchemaVersion = 1;

nlohmann::json to_json(const Persona& persona);
// Throws DataError on schema mismatch.
Persona persona_from_json(const nlohmann::json& j);

// Attributes drawn independently (occupation conditioned on employment);
// each Big Five trait uniform in [0, 1].
Persona sample_persona(const PopulationStats& stats, std::string id, Rng& rng);

// Home uniform over the home category; work/school drawn from its category
// within the commute radius of home, doubling the radius up to 6 times and
// then falling back to the whole category. Throws ConfigError when a
// required category is missing.
void assign_primary_locations(Persona& persona, const PoiStore& store,
                              const PersonaConfig& config, Rng& rng);

// Built-in activity table for a role, filtered to categories present in the
// store. Always contains "sleep" and "rest" at the home category.
ActivityLocationList template_activity_locations(Role role,
                                                 const PoiStore& store,
                                                 const PersonaConfig& config);

struct ActivityListResult {
  ActivityLocationList list;
  std::vector<std::string> fallback_reasons;
};

// With an adapter: asks the model, validates every category against the
// store, retries once, then falls back to the template table. Without one:
// the template table.
ActivityListResult generate_activity_location_list(const Persona& persona,
                                                   const PoiStore& store,
                                                   const PersonaConfig& config,
                                                   LlmAdapter* llm);

// Human-readable persona line for prompts.
std::string describe(const Persona& persona);
std::string describe(const BigFive& traits);
// Deterministic goals text used when no model writes one.
std::string default_goals(const Persona& persona, Role role);

}  // namespace trajsim
