#include "trajsim/sim_runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "trajsim/activity.hpp"
#include "trajsim/errors.hpp"

namespace trajsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Stream tag separating simulation substreams from persona substreams.
constexpr std::uint64_t kSimulationStream = 0x5157'4c4c'4d53'494dULL;

std::string agent_id(std::size_t index, std::size_t count) {
  std::size_t width = 4;
  for (std::size_t n = count; n >= 10000; n /= 10) ++width;
  std::string digits = std::to_string(index);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return "agent_" + digits;
}

std::string describe_population(const PopulationStats& stats) {
  std::string out = "employment shares:";
  for (const auto& [label, p] : stats.employment.entries) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " %s %.0f%%", label.c_str(), p * 100.0);
    out += buf;
  }
  return out;
}

void write_jsonl(const std::string& path, const std::vector<json>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const json& line : lines) out << line.dump() << '\n';
  if (!out) throw DataError("error writing '" + path + "'");
}

}  // namespace

// ---------------------------------------------------------------------------
// Personas

std::vector<Persona> generate_personas(const PopulationStats& stats,
                                       const PoiStore& store,
                                       const PersonaGenOptions& options) {
  stats.validate();
  std::vector<Persona> personas;
  personas.reserve(options.count);
  for (std::size_t i = 0; i < options.count; ++i) {
    Rng rng(derive_seed(options.seed, i));
    Persona persona = sample_persona(stats, agent_id(i, options.count), rng);
    assign_primary_locations(persona, store, options.persona, rng);
    const Role role = options.persona.role_of(persona.employment);
    persona.goals = default_goals(persona, role);
    if (options.llm) {
      const std::string prompt =
          prompt_template("persona_gen")
              .render({{"demographics", "age " + persona.age_bucket + ", " +
                                            persona.gender + ", " +
                                            persona.employment + " (" +
                                            persona.occupation + ")"},
                       {"big_five", describe(persona.big_five)},
                       {"population", describe_population(stats)}});
      try {
        persona.goals = options.llm->complete(prompt, ResponseSchema::persona_goals())
                            .value.at("goals")
                            .get<std::string>();
      } catch (const LlmError& e) {
        spdlog::warn("persona {}: goals LLM failed ({}), using default",
                     persona.id, e.what());
      }
    }
    persona.activity_locations =
        generate_activity_location_list(persona, store, options.persona,
                                        options.llm.get())
            .list;
    personas.push_back(std::move(persona));
  }
  return personas;
}

void write_personas(const std::string& path, std::span<const Persona> personas) {
  std::vector<json> lines;
  lines.reserve(personas.size());
  for (const Persona& p : personas) lines.push_back(to_json(p));
  write_jsonl(path, lines);
}

std::vector<Persona> read_personas(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open personas file '" + path + "'");
  std::vector<Persona> personas;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw DataError(path + ": line " + std::to_string(line_no) + ": invalid JSON");
    }
    try {
      personas.push_back(persona_from_json(j));
    } catch (const DataError& e) {
      throw DataError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return personas;
}

// ---------------------------------------------------------------------------
// Trace records

json to_json(const TraceRecord& r) {
  return {{"agent_id", r.agent_id},  {"day", r.day},
          {"start", r.start},        {"end", r.end},
          {"activity", r.activity},  {"category", r.category},
          {"poi_id", r.poi_id},      {"lat", r.lat},
          {"lon", r.lon},            {"fallback_flags", r.fallback_flags}};
}

TraceRecord trace_record_from_json(const json& j, std::size_t line_no) {
  try {
    TraceRecord r;
    r.agent_id = j.at("agent_id").get<std::string>();
    r.day = j.at("day").get<int>();
    r.start = j.at("start").get<int>();
    r.end = j.at("end").get<int>();
    r.activity = j.at("activity").get<std::string>();
    r.category = j.at("category").get<std::string>();
    r.poi_id = j.at("poi_id").get<std::string>();
    r.lat = j.at("lat").get<double>();
    r.lon = j.at("lon").get<double>();
    r.fallback_flags = j.at("fallback_flags").get<std::vector<std::string>>();
    GeoPoint(r.lat, r.lon);
    return r;
  } catch (const std::exception& e) {
    throw DataError("trace line " + std::to_string(line_no) + ": " + e.what());
  }
}

std::vector<TraceRecord> read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace file '" + path + "'");
  std::vector<TraceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw DataError("trace line " + std::to_string(line_no) + ": invalid JSON");
    }
    records.push_back(trace_record_from_json(j, line_no));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Simulation

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::ostringstream contents;
  contents << in.rdbuf();
  return fnv1a_hex(contents.str());
}

RunResult run_simulation(const SimConfig& config, const RunOptions& options) {
  config.validate();

  // Inputs first: nothing is written until everything has loaded.
  PoiStore store = load_pois_file(config.paths.pois);
  CheckinLog checkins;
  if (!config.paths.checkins.empty()) {
    checkins = load_checkins_file(config.paths.checkins);
  }
  if (config.attraction_from_checkins) {
    store = with_checkin_attraction(store, checkins);
  }
  const EcdfTable ecdfs(checkins);

  std::vector<Persona> personas;
  if (!config.paths.personas.empty()) {
    personas = read_personas(config.paths.personas);
  } else {
    const PopulationStats stats = PopulationStats::load(config.paths.population_stats);
    PersonaGenOptions gen;
    gen.count = static_cast<std::size_t>(config.agents);
    gen.seed = config.seed;
    gen.persona = config.persona;
    personas = generate_personas(stats, store, gen);
  }
  if (personas.size() < static_cast<std::size_t>(config.agents)) {
    throw ConfigError("simulation.agents = " + std::to_string(config.agents) +
                      " but only " + std::to_string(personas.size()) +
                      " personas are available");
  }
  personas.resize(static_cast<std::size_t>(config.agents));
  std::sort(personas.begin(), personas.end(),
            [](const Persona& a, const Persona& b) { return a.id < b.id; });

  std::vector<std::string> script;
  std::shared_ptr<ChatModel> shared_model;
  if (config.uses_llm()) {
    if (!config.llm_mock_script.empty()) {
      script = load_mock_script(config.llm_mock_script);
    } else {
      auto transport = options.transport ? options.transport
                                         : std::make_shared<HttpTransport>();
      shared_model = std::make_shared<OpenAiChatModel>(config.llm, transport);
    }
  }

  std::vector<Agent> agents;
  agents.reserve(personas.size());
  const std::uint64_t sim_seed = derive_seed(config.seed, kSimulationStream);
  for (std::size_t i = 0; i < personas.size(); ++i) {
    std::shared_ptr<LlmAdapter> llm;
    if (config.uses_llm()) {
      // One mock per agent keeps replies independent of scheduling.
      auto model = shared_model ? shared_model
                                : std::make_shared<ScriptedChatModel>(script);
      llm = std::make_shared<LlmAdapter>(model, config.llm);
    }
    agents.push_back(make_agent(std::move(personas[i]), store, config.persona,
                                config.memory, std::move(llm), derive_seed(sim_seed, i)));
  }

  DayModules modules{.store = store,
                     .ecdfs = ecdfs,
                     .persona = config.persona,
                     .physical = config.physical,
                     .strategy = config.strategy,
                     .engine = config.engine,
                     .radius_km = config.radius_km,
                     .radius_by_category = config.radius_by_category,
                     .max_listed_candidates = config.llm_max_candidates,
                     .day_start_minutes = config.day_start_minutes};

  std::vector<std::vector<DayTrace>> results(agents.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < agents.size(); i = next++) {
      try {
        for (int day = 0; day < config.days; ++day) {
          results[i].push_back(run_day(agents[i], day, modules));
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    const auto pool_size =
        std::min<std::size_t>(static_cast<std::size_t>(config.workers), agents.size());
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < pool_size; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);

  // Merge. Agents are sorted by id and days run in order, so this is the
  // (agent_id, day, start) order regardless of worker count.
  RunResult result;
  std::vector<json> trace_lines;
  std::vector<json> failure_lines;
  std::vector<json> memory_lines;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (const DayTrace& day : results[i]) {
      ++result.agent_days;
      if (day.failed) {
        ++result.failed_agent_days;
        failure_lines.push_back(
            {{"agent_id", day.agent_id}, {"day", day.day_index}, {"error", day.failure}});
        continue;
      }
      for (const DayEntry& e : day.entries) {
        TraceRecord r{.agent_id = day.agent_id,
                      .day = day.day_index,
                      .start = e.activity.start,
                      .end = e.activity.end(),
                      .activity = e.activity.activity_type,
                      .category = e.activity.location_category,
                      .poi_id = e.poi->id,
                      .lat = e.poi->location.lat(),
                      .lon = e.poi->location.lon(),
                      .fallback_flags = e.reasons};
        trace_lines.push_back(to_json(r));
      }
    }
    for (json& item : agents[i].memory.dump(config.days - 1)) {
      item["agent_id"] = agents[i].persona.id;
      memory_lines.push_back(std::move(item));
    }
  }
  result.records = trace_lines.size();

  const fs::path out_dir(config.paths.out);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory '" + out_dir.string() + "'");
  result.trace_path = (out_dir / "trace.jsonl").string();
  result.memory_path = (out_dir / "memory.jsonl").string();
  result.failures_path = (out_dir / "failures.jsonl").string();
  result.manifest_path = (out_dir / "manifest.json").string();
  write_jsonl(result.trace_path, trace_lines);
  write_jsonl(result.memory_path, memory_lines);
  write_jsonl(result.failures_path, failure_lines);
  result.trace_hash = file_hash(result.trace_path);

  const json config_json = config.to_json();
  const json manifest = {
      {"tool", "trajsim"},
      {"version", kVersion},
      {"seed", config.seed},
      {"config", config_json},
      {"config_hash", fnv1a_hex(config_json.dump())},
      {"trace_file", "trace.jsonl"},
      {"trace_hash", result.trace_hash},
      {"records", result.records},
      {"agent_days", result.agent_days},
      {"failed_agent_days", result.failed_agent_days},
  };
  std::ofstream manifest_out(result.manifest_path, std::ios::trunc);
  manifest_out << manifest.dump(2) << '\n';
  if (!manifest_out) throw DataError("cannot write '" + result.manifest_path + "'");
  return result;
}

// ---------------------------------------------------------------------------
// Export and metrics

namespace {

// Runs of consecutive records sharing (agent_id, day).
template <typename Fn>
void for_each_agent_day(std::span<const TraceRecord> records, Fn&& fn) {
  std::size_t begin = 0;
  while (begin < records.size()) {
    std::size_t end = begin + 1;
    while (end < records.size() && records[end].agent_id == records[begin].agent_id &&
           records[end].day == records[begin].day) {
      ++end;
    }
    fn(records.subspan(begin, end - begin));
    begin = end;
  }
}

}  // namespace

json export_geojson(std::span<const TraceRecord> records) {
  json features = json::array();
  for_each_agent_day(records, [&](std::span<const TraceRecord> day) {
    json coordinates = json::array();
    for (const TraceRecord& r : day) coordinates.push_back({r.lon, r.lat});
    if (coordinates.size() == 1) coordinates.push_back(coordinates[0]);
    features.push_back({
        {"type", "Feature"},
        {"geometry", {{"type", "LineString"}, {"coordinates", coordinates}}},
        {"properties",
         {{"agent_id", day.front().agent_id},
          {"day", day.front().day},
          {"visits", day.size()}}},
    });
  });
  return {{"type", "FeatureCollection"}, {"features", features}};
}

double radius_of_gyration(std::span<const GeoPoint> points) {
  if (points.empty()) return 0.0;
  // Offsets from the first point keep a stationary trace at exactly zero.
  const GeoPoint& origin = points.front();
  double dlat = 0.0;
  double dlon = 0.0;
  for (const GeoPoint& p : points) {
    dlat += p.lat() - origin.lat();
    dlon += p.lon() - origin.lon();
  }
  const double n = static_cast<double>(points.size());
  const GeoPoint centroid(origin.lat() + dlat / n, origin.lon() + dlon / n);
  double sum_sq = 0.0;
  for (const GeoPoint& p : points) {
    const double d = haversine(p, centroid);
    sum_sq += d * d;
  }
  return std::sqrt(sum_sq / n);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("ks_statistic: samples must be nonempty");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

std::vector<double> reference_jump_lengths(const CheckinLog& checkins,
                                           const PoiStore& store) {
  std::map<std::string_view, std::vector<const Checkin*>> by_user;
  for (const Checkin& c : checkins.records()) by_user[c.user_id].push_back(&c);
  std::vector<double> jumps;
  for (auto& [user, visits] : by_user) {
    std::stable_sort(visits.begin(), visits.end(), [](const Checkin* a, const Checkin* b) {
      return a->timestamp < b->timestamp;
    });
    for (std::size_t k = 1; k < visits.size(); ++k) {
      const Checkin* prev = visits[k - 1];
      const Checkin* cur = visits[k];
      if (prev->timestamp / 86400 != cur->timestamp / 86400) continue;
      const Poi* from = store.find(prev->poi_id);
      const Poi* to = store.find(cur->poi_id);
      if (!from || !to) continue;
      jumps.push_back(haversine(from->location, to->location));
    }
  }
  return jumps;
}

MetricsReport compute_metrics(std::span<const TraceRecord> records,
                              const std::vector<double>* reference_jumps) {
  MetricsReport report;
  report.visits = records.size();
  std::map<std::string, std::vector<GeoPoint>> per_agent;
  for (const TraceRecord& r : records) {
    ++report.category_histogram[r.category];
    per_agent[r.agent_id].emplace_back(r.lat, r.lon);
  }
  for_each_agent_day(records, [&](std::span<const TraceRecord> day) {
    for (std::size_t k = 1; k < day.size(); ++k) {
      report.jump_lengths.push_back(haversine(GeoPoint(day[k - 1].lat, day[k - 1].lon),
                                              GeoPoint(day[k].lat, day[k].lon)));
    }
  });
  for (const auto& [agent, points] : per_agent) {
    report.radius_of_gyration[agent] = radius_of_gyration(points);
  }

  report.jump_histogram.edges = {0, 0.5, 1, 2, 4, 8, 16, 32, 64,
                                 std::numeric_limits<double>::infinity()};
  report.jump_histogram.counts.assign(report.jump_histogram.edges.size() - 1, 0);
  for (double d : report.jump_lengths) {
    const auto& edges = report.jump_histogram.edges;
    const auto bin = std::upper_bound(edges.begin(), edges.end(), d) - edges.begin() - 1;
    ++report.jump_histogram.counts[static_cast<std::size_t>(bin)];
  }

  if (reference_jumps && !reference_jumps->empty() && !report.jump_lengths.empty()) {
    report.ks_statistic_vs_reference = ks_statistic(report.jump_lengths, *reference_jumps);
  }
  return report;
}

json to_json(const MetricsReport& report) {
  json edges = json::array();
  for (double e : report.jump_histogram.edges) {
    edges.push_back(std::isinf(e) ? json("inf") : json(e));
  }
  return {
      {"visits", report.visits},
      {"jumps", report.jump_lengths.size()},
      {"jump_length_histogram_km",
       {{"edges", edges}, {"counts", report.jump_histogram.counts}}},
      {"radius_of_gyration_km", report.radius_of_gyration},
      {"category_histogram", report.category_histogram},
      {"ks_statistic_vs_reference",
       report.ks_statistic_vs_reference ? json(*report.ks_statistic_vs_reference)
                                        : json(nullptr)},
  };
}

}  // namespace trajsim
