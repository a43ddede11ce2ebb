#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajsim/config.hpp"
#include "trajsim/llm_adapter.hpp"
#include "trajsim/persona.hpp"
#include "trajsim/poi_store.hpp"

namespace trajsim {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Personas

struct PersonaGenOptions {
  std::size_t count = 10;
  std::uint64_t seed = 1;
  PersonaConfig persona;
  // When set, the model writes goals and activity-location lists.
  std::shared_ptr<LlmAdapter> llm;
};

// Persona i uses the rng substream derive_seed(seed, i); ids are
// agent_0000, agent_0001, ...
std::vector<Persona> generate_personas(const PopulationStats& stats,
                                       const PoiStore& store,
                                       const PersonaGenOptions& options);

void write_personas(const std::string& path, std::span<const Persona> personas);
std::vector<Persona> read_personas(const std::string& path);

// ---------------------------------------------------------------------------
// Trace records

struct TraceRecord {
  std::string agent_id;
  int day = 0;
  int start = 0;
  int end = 0;
  std::string activity;
  std::string category;
  std::string poi_id;
  double lat = 0.0;
  double lon = 0.0;
  std::vector<std::string> fallback_flags;
};

nlohmann::json to_json(const TraceRecord& record);
// Throws DataError naming the line number.
TraceRecord trace_record_from_json(const nlohmann::json& j, std::size_t line_no);
std::vector<TraceRecord> read_trace(const std::string& path);

// ---------------------------------------------------------------------------
// Simulation

struct RunOptions {
  // Transport handed to any network-backed model. Defaults to HttpTransport.
  std::shared_ptr<Transport> transport;
};

struct RunResult {
  std::string trace_path;
  std::string manifest_path;
  std::string memory_path;
  std::string failures_path;
  std::size_t agent_days = 0;
  std::size_t failed_agent_days = 0;
  std::size_t records = 0;
  std::string trace_hash;
};

// Loads inputs (failing before any output is written), runs every agent on
// a pool of `config.workers` threads, and writes trace.jsonl (sorted by
// agent_id, day, start), memory.jsonl, failures.jsonl and manifest.json into
// config.paths.out.
RunResult run_simulation(const SimConfig& config, const RunOptions& options = {});

// FNV-1a 64-bit of a file's bytes, as 16 hex digits.
std::string file_hash(const std::string& path);
std::string fnv1a_hex(std::string_view bytes);

// ---------------------------------------------------------------------------
// Export and metrics

// One LineString per (agent, day) in visit order; a single-visit day repeats
// its coordinate.
nlohmann::json export_geojson(std::span<const TraceRecord> records);

struct Histogram {
  std::vector<double> edges;  // bin i covers [edges[i], edges[i+1])
  std::vector<std::uint64_t> counts;
};

struct MetricsReport {
  std::vector<double> jump_lengths;
  Histogram jump_histogram;
  std::map<std::string, double> radius_of_gyration;
  std::map<std::string, std::uint64_t> category_histogram;
  std::optional<double> ks_statistic_vs_reference;
  std::size_t visits = 0;
};

// Root-mean-square haversine distance to the lat/lon mean. 0 for no points.
double radius_of_gyration(std::span<const GeoPoint> points);

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

// Jumps between consecutive check-ins of the same user on the same UTC day.
std::vector<double> reference_jump_lengths(const CheckinLog& checkins,
                                           const PoiStore& store);

MetricsReport compute_metrics(std::span<const TraceRecord> records,
                              const std::vector<double>* reference_jumps = nullptr);

nlohmann::json to_json(const MetricsReport& report);

}  // namespace trajsim
