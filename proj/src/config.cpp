#include "trajsim/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "trajsim/errors.hpp"

namespace trajsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Walks one JSON section, rejecting keys nobody consumed.
class Section {
 public:
  Section(const json& j, std::string name) : name_(std::move(name)) {
    if (j.is_null()) return;
    if (!j.is_object()) throw ConfigError("'" + name_ + "' must be an object");
    object_ = &j;
  }

  ~Section() noexcept(false) {
    if (!object_ || std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : object_->items()) {
      if (!seen_.contains(key)) {
        throw ConfigError("unknown config key '" + qualified(key) + "'");
      }
    }
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    if (!object_) return nullptr;
    auto it = object_->find(key);
    return it == object_->end() || it->is_null() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& key, T& target) {
    if (const json* v = get(key)) {
      try {
        target = v->get<T>();
      } catch (const json::exception&) {
        throw ConfigError("config key '" + qualified(key) + "' has the wrong type");
      }
    }
  }

  // Numbers, plus the string "inf" for +infinity.
  void read_real(const std::string& key, double& target) {
    const json* v = get(key);
    if (!v) return;
    if (v->is_string() && v->get<std::string>() == "inf") {
      target = kNoCutoff;
    } else if (v->is_number()) {
      target = v->get<double>();
    } else {
      throw ConfigError("config key '" + qualified(key) +
                        "' must be a number or \"inf\"");
    }
  }

  std::string qualified(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

 private:
  const json* object_ = nullptr;
  std::string name_;
  std::set<std::string> seen_;
};

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

const json& section_of(const json& root, const char* key) {
  static const json null_value;
  auto it = root.find(key);
  return it == root.end() ? null_value : *it;
}

json real_to_json(double value) {
  return std::isinf(value) ? json("inf") : json(value);
}

}  // namespace

void SimConfig::validate() const {
  if (agents <= 0) throw ConfigError("simulation.agents must be > 0");
  if (days <= 0) throw ConfigError("simulation.days must be > 0");
  if (day_start_minutes < 0 || day_start_minutes >= kMinutesPerDay) {
    throw ConfigError("simulation.day_start_minutes must be in [0, 1440)");
  }
  if (workers <= 0) throw ConfigError("simulation.workers must be > 0");
  if (paths.pois.empty()) throw ConfigError("paths.pois is required");
  if (paths.personas.empty() && paths.population_stats.empty()) {
    throw ConfigError("one of paths.personas or paths.population_stats is required");
  }
  if (paths.out.empty()) throw ConfigError("paths.out is required");
  physical.validate();
  if (!(radius_km > 0.0)) throw ConfigError("destination.radius_km must be > 0");
  for (const auto& [category, r] : radius_by_category) {
    if (!(r > 0.0)) {
      throw ConfigError("destination.radius_by_category." + category + " must be > 0");
    }
  }
  if (llm_max_candidates == 0) {
    throw ConfigError("destination.llm_max_candidates must be > 0");
  }
  if (!(persona.commute_radius_km > 0.0)) {
    throw ConfigError("persona.commute_radius_km must be > 0");
  }
  memory.validate();
  if (!(memory.epsilon > 0.0 && memory.epsilon < 1.0)) {
    throw ConfigError("frequency.epsilon must be in (0, 1)");
  }
  llm.validate();
}

SimConfig SimConfig::from_json(const json& input, const std::string& base_dir) {
  if (!input.is_object()) throw ConfigError("config must be a JSON object");
  // A run manifest embeds the effective config.
  const json& j = input.contains("config") && input.contains("trace_hash")
                      ? input.at("config")
                      : input;

  SimConfig c;
  {
    Section root(j, "");
    for (const char* known : {"simulation", "paths", "impedance", "frequency",
                              "destination", "activity", "persona", "memory",
                              "llm", "poi"}) {
      root.get(known);
    }
  }
  {
    Section s(section_of(j, "simulation"), "simulation");
    s.read("seed", c.seed);
    s.read("agents", c.agents);
    s.read("days", c.days);
    s.read("day_start_minutes", c.day_start_minutes);
    s.read("workers", c.workers);
  }
  {
    Section s(section_of(j, "paths"), "paths");
    s.read("pois", c.paths.pois);
    s.read("checkins", c.paths.checkins);
    s.read("personas", c.paths.personas);
    s.read("population_stats", c.paths.population_stats);
    s.read("out", c.paths.out);
    for (std::string* p : {&c.paths.pois, &c.paths.checkins, &c.paths.personas,
                           &c.paths.population_stats, &c.paths.out}) {
      *p = resolve(*p, base_dir);
    }
  }
  {
    Section s(section_of(j, "poi"), "poi");
    s.read("attraction_from_checkins", c.attraction_from_checkins);
  }
  {
    Section s(section_of(j, "impedance"), "impedance");
    s.read_real("r0_km", c.physical.impedance.r0_km);
    s.read_real("beta", c.physical.impedance.beta);
    s.read_real("k_km", c.physical.impedance.k_km);
    std::string mode{to_string(c.physical.mode)};
    s.read("mode", mode);
    c.physical.mode = parse_deterrence_mode(mode);
  }
  {
    Section s(section_of(j, "frequency"), "frequency");
    s.read("epsilon", c.memory.epsilon);
    s.read("sigma", c.physical.sigma);
    std::string psi{to_string(c.physical.psi)};
    s.read("psi", psi);
    c.physical.psi = parse_psi(psi);
  }
  {
    Section s(section_of(j, "destination"), "destination");
    std::string strategy{to_string(c.strategy)};
    s.read("strategy", strategy);
    c.strategy = parse_destination_strategy(strategy);
    s.read("radius_km", c.radius_km);
    std::map<std::string, double> by_category;
    s.read("radius_by_category", by_category);
    c.radius_by_category.insert(by_category.begin(), by_category.end());
    s.read("llm_max_candidates", c.llm_max_candidates);
  }
  {
    Section s(section_of(j, "activity"), "activity");
    std::string engine{to_string(c.engine)};
    s.read("engine", engine);
    c.engine = parse_activity_engine(engine);
  }
  {
    Section s(section_of(j, "persona"), "persona");
    s.read("home_category", c.persona.home_category);
    s.read("work_category", c.persona.work_category);
    s.read("school_category", c.persona.school_category);
    s.read("commute_radius_km", c.persona.commute_radius_km);
    s.read("employee_labels", c.persona.employee_labels);
    s.read("student_labels", c.persona.student_labels);
    s.read("retired_labels", c.persona.retired_labels);
  }
  {
    Section s(section_of(j, "memory"), "memory");
    if (const json* d = s.get("density_weights")) {
      Section w(*d, "memory.density_weights");
      w.read("events", c.memory.density.events);
      w.read("entities", c.memory.density.entities);
      w.read("actions", c.memory.density.actions);
      w.read("attributes", c.memory.density.attributes);
    }
    s.read("a", c.memory.importance.density_gain);
    s.read("b", c.memory.importance.recency_gain);
    s.read("c", c.memory.importance.access_gain);
    s.read("bias", c.memory.importance.bias);
    s.read("tau_days", c.memory.importance.tau_days);
    s.read("access_cap", c.memory.importance.access_cap);
    s.read("threshold", c.memory.prune_threshold);
    s.read("history_k", c.memory.history_k);
  }
  {
    Section s(section_of(j, "llm"), "llm");
    s.read("endpoint_url", c.llm.endpoint_url);
    s.read("model_name", c.llm.model_name);
    s.read("temperature", c.llm.temperature);
    s.read("timeout_s", c.llm.timeout_s);
    s.read("max_retries", c.llm.max_retries);
    s.read("api_key_env", c.llm.api_key_env);
    s.read("mock_script", c.llm_mock_script);
    c.llm_mock_script = resolve(c.llm_mock_script, base_dir);
  }
  return c;
}

SimConfig SimConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  return from_json(j, fs::absolute(path).parent_path().string());
}

json SimConfig::to_json() const {
  json radius_map = json::object();
  for (const auto& [category, r] : radius_by_category) radius_map[category] = r;
  return {
      {"simulation",
       {{"seed", seed},
        {"agents", agents},
        {"days", days},
        {"day_start_minutes", day_start_minutes},
        {"workers", workers}}},
      {"paths",
       {{"pois", paths.pois},
        {"checkins", paths.checkins},
        {"personas", paths.personas},
        {"population_stats", paths.population_stats},
        {"out", paths.out}}},
      {"poi", {{"attraction_from_checkins", attraction_from_checkins}}},
      {"impedance",
       {{"r0_km", physical.impedance.r0_km},
        {"beta", physical.impedance.beta},
        {"k_km", real_to_json(physical.impedance.k_km)},
        {"mode", to_string(physical.mode)}}},
      {"frequency",
       {{"epsilon", memory.epsilon},
        {"sigma", physical.sigma},
        {"psi", to_string(physical.psi)}}},
      {"destination",
       {{"strategy", to_string(strategy)},
        {"radius_km", radius_km},
        {"radius_by_category", radius_map},
        {"llm_max_candidates", llm_max_candidates}}},
      {"activity", {{"engine", to_string(engine)}}},
      {"persona",
       {{"home_category", persona.home_category},
        {"work_category", persona.work_category},
        {"school_category", persona.school_category},
        {"commute_radius_km", persona.commute_radius_km},
        {"employee_labels", persona.employee_labels},
        {"student_labels", persona.student_labels},
        {"retired_labels", persona.retired_labels}}},
      {"memory",
       {{"density_weights",
         {{"events", memory.density.events},
          {"entities", memory.density.entities},
          {"actions", memory.density.actions},
          {"attributes", memory.density.attributes}}},
        {"a", memory.importance.density_gain},
        {"b", memory.importance.recency_gain},
        {"c", memory.importance.access_gain},
        {"bias", memory.importance.bias},
        {"tau_days", memory.importance.tau_days},
        {"access_cap", memory.importance.access_cap},
        {"threshold", memory.prune_threshold},
        {"history_k", memory.history_k}}},
      {"llm",
       {{"endpoint_url", llm.endpoint_url},
        {"model_name", llm.model_name},
        {"temperature", llm.temperature},
        {"timeout_s", llm.timeout_s},
        {"max_retries", llm.max_retries},
        {"api_key_env", llm.api_key_env},
        {"mock_script", llm_mock_script}}},
  };
}

std::vector<std::string> load_mock_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open LLM mock script '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_array()) {
    throw ConfigError("LLM mock script '" + path + "' must be a JSON array");
  }
  std::vector<std::string> replies;
  for (const auto& reply : j) {
    replies.push_back(reply.is_string() ? reply.get<std::string>() : reply.dump());
  }
  if (replies.empty()) throw ConfigError("LLM mock script '" + path + "' is empty");
  return replies;
}

}  // namespace trajsim
