#include "trajsim/persona.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <spdlog/spdlog.h>

#include "trajsim/errors.hpp"
#include "trajsim/llm_adapter.hpp"

namespace trajsim {

using nlohmann::json;

void LabelDistribution::validate(std::string_view what) const {
  if (entries.empty()) {
    throw ConfigError(std::string(what) + ": distribution is empty");
  }
  double total = 0.0;
  for (const auto& [label, p] : entries) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ConfigError(std::string(what) + ": probability of '" + label +
                        "' must be finite and >= 0");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError(std::string(what) + ": probabilities sum to " +
                      std::to_string(total) + ", expected 1");
  }
}

const std::string& LabelDistribution::sample(Rng& rng) const {
  const double u = rng.uniform();
  double cumulative = 0.0;
  const std::pair<std::string, double>* last_positive = &entries.front();
  for (const auto& entry : entries) {
    if (entry.second <= 0.0) continue;
    cumulative += entry.second;
    last_positive = &entry;
    if (u < cumulative) return entry.first;
  }
  return last_positive->first;
}

bool LabelDistribution::contains(std::string_view label) const {
  return std::any_of(entries.begin(), entries.end(),
                     [&](const auto& e) { return e.first == label; });
}

void PopulationStats::validate() const {
  age_buckets.validate("age_buckets");
  genders.validate("genders");
  employment.validate("employment");
  for (const auto& [label, p] : employment.entries) {
    auto row = occupations_by_employment.find(label);
    if (row == occupations_by_employment.end()) {
      throw ConfigError("occupations_by_employment: missing row for employment '" +
                        label + "'");
    }
    row->second.validate("occupations_by_employment." + label);
  }
}

namespace {

LabelDistribution distribution_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) {
    throw ConfigError(what + ": expected an array of [label, probability] pairs");
  }
  LabelDistribution d;
  for (const auto& entry : j) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() ||
        !entry[1].is_number()) {
      throw ConfigError(what + ": each entry must be [label, probability]");
    }
    d.entries.emplace_back(entry[0].get<std::string>(), entry[1].get<double>());
  }
  return d;
}

}  // namespace

PopulationStats PopulationStats::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("population stats must be an object");
  auto field = [&](const char* key) -> const json& {
    if (!j.contains(key)) {
      throw ConfigError(std::string("population stats: missing '") + key + "'");
    }
    return j.at(key);
  };
  PopulationStats stats;
  stats.age_buckets = distribution_from_json(field("age_buckets"), "age_buckets");
  stats.genders = distribution_from_json(field("genders"), "genders");
  stats.employment = distribution_from_json(field("employment"), "employment");
  const json& occupations = field("occupations_by_employment");
  if (!occupations.is_object()) {
    throw ConfigError("occupations_by_employment must be an object");
  }
  for (const auto& [label, row] : occupations.items()) {
    stats.occupations_by_employment.emplace(
        label, distribution_from_json(row, "occupations_by_employment." + label));
  }
  stats.validate();
  return stats;
}

PopulationStats PopulationStats::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open population stats '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ConfigError("population stats '" + path + "' is not valid JSON");
  }
  return from_json(j);
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Employee: return "employee";
    case Role::Student: return "student";
    case Role::Unemployed: return "unemployed";
    case Role::Retired: return "retired";
  }
  return "unemployed";
}

Role PersonaConfig::role_of(std::string_view employment) const {
  auto listed = [&](const std::vector<std::string>& labels) {
    return std::find(labels.begin(), labels.end(), employment) != labels.end();
  };
  if (listed(employee_labels)) return Role::Employee;
  if (listed(student_labels)) return Role::Student;
  if (listed(retired_labels)) return Role::Retired;
  return Role::Unemployed;
}

std::optional<std::string> PersonaConfig::anchor_category(Role role) const {
  if (role == Role::Employee) return work_category;
  if (role == Role::Student) return school_category;
  return std::nullopt;
}

bool ActivityLocationList::contains(std::string_view activity) const {
  return entries.find(std::string(activity)) != entries.end();
}

bool ActivityLocationList::allows(std::string_view activity,
                                  std::string_view category) const {
  auto it = entries.find(std::string(activity));
  if (it == entries.end()) return false;
  return std::find(it->second.begin(), it->second.end(), category) !=
         it->second.end();
}

const std::vector<std::string>& ActivityLocationList::categories_for(
    std::string_view activity) const {
  static const std::vector<std::string> none;
  auto it = entries.find(std::string(activity));
  return it == entries.end() ? none : it->second;
}

json to_json(const Persona& p) {
  json j = {
      {"schema_version", kPersonaSchemaVersion},
      {"id", p.id},
      {"age_bucket", p.age_bucket},
      {"gender", p.gender},
      {"employment", p.employment},
      {"occupation", p.occupation},
      {"big_five",
       {{"openness", p.big_five.openness},
        {"conscientiousness", p.big_five.conscientiousness},
        {"extraversion", p.big_five.extraversion},
        {"agreeableness", p.big_five.agreeableness},
        {"neuroticism", p.big_five.neuroticism}}},
      {"home_poi", p.home_poi},
      {"workplace_or_school_poi",
       p.anchor_poi ? json(*p.anchor_poi) : json(nullptr)},
      {"activity_location_list", p.activity_locations.entries},
      {"goals", p.goals},
  };
  return j;
}

Persona persona_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kPersonaSchemaVersion) {
      throw DataError("unsupported persona schema_version " +
                      j.at("schema_version").dump());
    }
    Persona p;
    p.id = j.at("id").get<std::string>();
    p.age_bucket = j.at("age_bucket").get<std::string>();
    p.gender = j.at("gender").get<std::string>();
    p.employment = j.at("employment").get<std::string>();
    p.occupation = j.at("occupation").get<std::string>();
    const json& b = j.at("big_five");
    p.big_five = {b.at("openness").get<double>(),
                  b.at("conscientiousness").get<double>(),
                  b.at("extraversion").get<double>(),
                  b.at("agreeableness").get<double>(),
                  b.at("neuroticism").get<double>()};
    for (double t : {p.big_five.openness, p.big_five.conscientiousness,
                     p.big_five.extraversion, p.big_five.agreeableness,
                     p.big_five.neuroticism}) {
      if (!(t >= 0.0 && t <= 1.0)) throw DataError("Big Five trait outside [0, 1]");
    }
    p.home_poi = j.at("home_poi").get<std::string>();
    const json& anchor = j.at("workplace_or_school_poi");
    if (!anchor.is_null()) p.anchor_poi = anchor.get<std::string>();
    p.activity_locations.entries =
        j.at("activity_location_list")
            .get<std::map<std::string, std::vector<std::string>>>();
    for (const auto& [activity, categories] : p.activity_locations.entries) {
      if (categories.empty()) {
        throw DataError("activity '" + activity + "' has no location categories");
      }
    }
    p.goals = j.value("goals", "");
    return p;
  } catch (const json::exception& e) {
    throw DataError(std::string("persona record: ") + e.what());
  }
}

Persona sample_persona(const PopulationStats& stats, std::string id, Rng& rng) {
  Persona p;
  p.id = std::move(id);
  p.age_bucket = stats.age_buckets.sample(rng);
  p.gender = stats.genders.sample(rng);
  p.employment = stats.employment.sample(rng);
  p.occupation = stats.occupations_by_employment.find(p.employment)->second.sample(rng);
  p.big_five.openness = rng.uniform();
  p.big_five.conscientiousness = rng.uniform();
  p.big_five.extraversion = rng.uniform();
  p.big_five.agreeableness = rng.uniform();
  p.big_five.neuroticism = rng.uniform();
  return p;
}

void assign_primary_locations(Persona& persona, const PoiStore& store,
                              const PersonaConfig& config, Rng& rng) {
  const auto homes = store.of_category(config.home_category);
  if (homes.empty()) {
    throw ConfigError("POI store has no residential category '" +
                      config.home_category + "' (persona.home_category)");
  }
  const Poi* home = homes[rng.below(homes.size())];
  persona.home_poi = home->id;
  persona.anchor_poi.reset();

  const auto anchor_category = config.anchor_category(config.role_of(persona.employment));
  if (!anchor_category) return;
  if (!store.has_category(*anchor_category)) {
    throw ConfigError("POI store has no category '" + *anchor_category +
                      "' required for employment '" + persona.employment + "'");
  }
  double radius = config.commute_radius_km;
  std::vector<const Poi*> options;
  for (int doubling = 0; doubling <= 6 && options.empty(); ++doubling) {
    options = store.query_radius(home->location, radius, *anchor_category);
    radius *= 2.0;
  }
  if (options.empty()) options = store.of_category(*anchor_category);
  persona.anchor_poi = options[rng.below(options.size())]->id;
}

ActivityLocationList template_activity_locations(Role role,
                                                 const PoiStore& store,
                                                 const PersonaConfig& config) {
  const std::string& home = config.home_category;
  std::vector<std::pair<std::string, std::vector<std::string>>> table = {
      {"meal", {"Cafe", "Casual Dining", home, "Restaurant"}},
      {"shopping", {"Supermarket", "Convenience Store", "Shopping Mall"}},
      {"leisure", {"Park", "Cinema", "Bar", "Museum"}},
      {"sports and exercise", {"Gym", "Park"}},
      {"errands", {"Bank", "Post Office", "Pharmacy"}},
  };
  if (role == Role::Employee) table.push_back({"work", {config.work_category}});
  if (role == Role::Student) {
    table.push_back({"study", {config.school_category, "Library"}});
  }

  ActivityLocationList list;
  list.entries["sleep"] = {home};
  list.entries["rest"] = {home};
  for (auto& [activity, categories] : table) {
    std::vector<std::string> present;
    for (auto& category : categories) {
      if (store.has_category(category) &&
          std::find(present.begin(), present.end(), category) == present.end()) {
        present.push_back(category);
      }
    }
    if (!present.empty()) list.entries[activity] = std::move(present);
  }
  return list;
}

namespace {

std::optional<std::string> check_list(const json& value, const PoiStore& store) {
  for (const auto& [activity, categories] : value.items()) {
    if (categories.empty()) return "activity '" + activity + "' has no categories";
    for (const auto& c : categories) {
      if (!store.has_category(c.get<std::string>())) {
        return "unknown location category '" + c.get<std::string>() + "'";
      }
    }
  }
  return std::nullopt;
}

std::string join(const std::set<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

}  // namespace

ActivityListResult generate_activity_location_list(const Persona& persona,
                                                   const PoiStore& store,
                                                   const PersonaConfig& config,
                                                   LlmAdapter* llm) {
  const Role role = config.role_of(persona.employment);
  ActivityListResult result;
  if (!llm) {
    result.list = template_activity_locations(role, store, config);
    return result;
  }

  const std::string base = prompt_template("activity_list")
                               .render({{"persona", describe(persona)},
                                        {"categories", join(store.categories())},
                                        {"home_category", config.home_category}});
  std::string prompt = base;
  for (int attempt = 0; attempt < 2; ++attempt) {
    json value;
    try {
      value = llm->complete(prompt, ResponseSchema::activity_list()).value;
    } catch (const LlmError& e) {
      result.fallback_reasons.push_back("activity_list_llm_error");
      spdlog::warn("persona {}: activity list LLM failed ({}), using template",
                   persona.id, e.what());
      break;
    }
    if (auto problem = check_list(value, store)) {
      prompt = base + "\n\nYour previous reply was rejected (" + *problem +
               "). Use only the listed categories.";
      if (attempt == 1) {
        result.fallback_reasons.push_back("activity_list_invalid");
        spdlog::warn("persona {}: activity list invalid twice ({}), using template",
                     persona.id, *problem);
      }
      continue;
    }
    for (const auto& [activity, categories] : value.items()) {
      result.list.entries[activity] = categories.get<std::vector<std::string>>();
    }
    // The day loop needs somewhere to sleep and idle.
    result.list.entries.try_emplace("sleep", std::vector{config.home_category});
    result.list.entries.try_emplace("rest", std::vector{config.home_category});
    return result;
  }
  result.list = template_activity_locations(role, store, config);
  return result;
}

std::string describe(const BigFive& t) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "openness %.2f, conscientiousness %.2f, extraversion %.2f, "
                "agreeableness %.2f, neuroticism %.2f",
                t.openness, t.conscientiousness, t.extraversion,
                t.agreeableness, t.neuroticism);
  return buf;
}

std::string describe(const Persona& p) {
  return "age " + p.age_bucket + ", " + p.gender + ", " + p.employment + " (" +
         p.occupation + "); personality: " + describe(p.big_five);
}

std::string default_goals(const Persona& p, Role role) {
  std::string goals;
  switch (role) {
    case Role::Employee: goals = "Keep a steady work routine"; break;
    case Role::Student: goals = "Keep up with classes and study"; break;
    case Role::Retired: goals = "Enjoy unhurried days close to home"; break;
    case Role::Unemployed: goals = "Take care of daily needs and errands"; break;
  }
  goals += p.big_five.extraversion >= 0.5 ? ", seeking out social places"
                                          : ", preferring quiet familiar places";
  goals += p.big_five.openness >= 0.5 ? " and trying new venues." : " and regular haunts.";
  return goals;
}

}  // namespace trajsim
