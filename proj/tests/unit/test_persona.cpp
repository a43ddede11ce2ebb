#include <doctest.h>

#include "fixtures.hpp"
#include "trajsim/errors.hpp"
#include "trajsim/llm_adapter.hpp"
#include "trajsim/persona.hpp"

using namespace trajsim;

namespace {

const PopulationStats& stats() {
  static const PopulationStats s = PopulationStats::from_json(fixtures::population_stats_json());
  return s;
}

const PoiStore& city() {
  static const PoiStore s(fixtures::make_city(2000, 9));
  return s;
}

}  // namespace

TEST_CASE("population stats validation") {
  auto j = fixtures::population_stats_json();
  j["genders"] = nlohmann::json::parse(R"([["female", 0.6], ["male", 0.6]])");
  CHECK_THROWS_AS(PopulationStats::from_json(j), ConfigError);
  j = fixtures::population_stats_json();
  j["occupations_by_employment"].erase("retired");
  CHECK_THROWS_AS(PopulationStats::from_json(j), ConfigError);
}

TEST_CASE("sampled personas respect the occupation table") {
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const Persona p = sample_persona(stats(), "x", rng);
    CHECK(stats().occupations_by_employment.at(p.employment).contains(p.occupation));
    CHECK(p.big_five.openness >= 0.0);
    CHECK(p.big_five.neuroticism < 1.0);
  }
}

TEST_CASE("primary locations are assigned per role") {
  const PersonaConfig cfg;
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    Persona p = sample_persona(stats(), "x", rng);
    assign_primary_locations(p, city(), cfg, rng);
    CHECK(city().find(p.home_poi)->category == "Home");
    const Role role = cfg.role_of(p.employment);
    if (role == Role::Employee) {
      REQUIRE(p.anchor_poi.has_value());
      CHECK(city().find(*p.anchor_poi)->category == "Office");
    } else if (role == Role::Student) {
      REQUIRE(p.anchor_poi.has_value());
      CHECK(city().find(*p.anchor_poi)->category == "School");
    } else {
      CHECK_FALSE(p.anchor_poi.has_value());
    }
  }
  PersonaConfig missing;
  missing.home_category = "Castle";
  Rng r2(1);
  Persona p = sample_persona(stats(), "x", r2);
  CHECK_THROWS_AS(assign_primary_locations(p, city(), missing, r2), ConfigError);
}

TEST_CASE("template activity lists only name stocked categories") {
  const PersonaConfig cfg;
  for (Role role : {Role::Employee, Role::Student, Role::Unemployed, Role::Retired}) {
    const auto list = template_activity_locations(role, city(), cfg);
    CHECK(list.contains("sleep"));
    CHECK(list.allows("sleep", "Home"));
    for (const auto& [activity, cats] : list.entries) {
      CHECK_FALSE(cats.empty());
      for (const auto& c : cats) CHECK(city().has_category(c));
    }
    CHECK(list.contains("work") == (role == Role::Employee));
    CHECK(list.contains("study") == (role == Role::Student));
  }
}

TEST_CASE("LLM activity list with validation and fallback") {
  Rng rng(2);
  Persona p = sample_persona(stats(), "x", rng);
  assign_primary_locations(p, city(), {}, rng);

  SUBCASE("valid reply is kept, sleep is added") {
    auto model = std::make_shared<ScriptedChatModel>(
        std::vector<std::string>{R"({"meal": ["Cafe", "Restaurant"], "leisure": ["Park"]})"});
    LlmAdapter llm(model, {});
    const auto r = generate_activity_location_list(p, city(), {}, &llm);
    CHECK(r.fallback_reasons.empty());
    CHECK(r.list.allows("meal", "Cafe"));
    CHECK(r.list.contains("sleep"));
  }
  SUBCASE("unknown category twice -> template") {
    auto model = std::make_shared<ScriptedChatModel>(
        std::vector<std::string>{R"({"meal": ["Moon Base"]})"});
    LlmAdapter llm(model, {});
    const auto r = generate_activity_location_list(p, city(), {}, &llm);
    CHECK(model->calls() == 2);
    CHECK_FALSE(r.fallback_reasons.empty());
    CHECK(r.list.entries ==
          template_activity_locations(PersonaConfig{}.role_of(p.employment), city(), {}).entries);
  }
}

TEST_CASE("persona JSON round trip") {
  Rng rng(6);
  Persona p = sample_persona(stats(), "agent_0001", rng);
  assign_primary_locations(p, city(), {}, rng);
  p.activity_locations = template_activity_locations(Role::Employee, city(), {});
  p.goals = "see friends";
  const auto j = to_json(p);
  CHECK(j.at("schema_version") == 1);
  const Persona q = persona_from_json(j);
  CHECK(to_json(q) == j);
  auto bad = j;
  bad["schema_version"] = 2;
  CHECK_THROWS_AS(persona_from_json(bad), DataError);
  bad = j;
  bad.erase("home_poi");
  CHECK_THROWS_AS(persona_from_json(bad), DataError);
}
