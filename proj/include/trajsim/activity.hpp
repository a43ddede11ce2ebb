#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajsim/destination.hpp"
#include "trajsim/memory.hpp"
#include "trajsim/persona.hpp"
#include "trajsim/rng.hpp"

namespace trajsim {

class LlmAdapter;

inline constexpr int kMinutesPerDay = 1440;
inline constexpr int kMinActivityMinutes = 5;
inline constexpr int kMaxActivityMinutes = 960;
inline constexpr int kTemplateJitterMinutes = 15;

struct Activity {
  std::string activity_type;
  std::string location_category;
  int duration = 0;  // minutes
  int start = 0;     // minutes since midnight

  int end() const noexcept { return start + duration; }
  friend bool operator==(const Activity&, const Activity&) = default;
};

enum class ActivityEngine { Llm, Template };

ActivityEngine parse_activity_engine(std::string_view text);
std::string_view to_string(ActivityEngine engine);

struct ActivityRequest {
  const Persona& persona;
  Role role;
  std::span<const Activity> routine;
  std::string_view memory_summary;
  int clock = 0;
  int day_index = 0;
};

struct ActivityProposal {
  Activity activity;
  std::vector<std::string> reasons;
};

// Time-of-day rule table for the persona's role. Durations fill the current
// block (or a nominal slot for discretionary blocks) with +-15 minutes of
// seeded jitter; leisure weight scales with extraversion by +-20%.
ActivityProposal template_next_activity(const ActivityRequest& request, Rng& rng);

// LLM engine when `llm` is non-null: the reply must name an activity of the
// persona's list, one of its categories, and a duration in [5, 960]. One
// retry, then the template. Either way the duration is truncated at
// midnight. Requires clock < 1440.
ActivityProposal next_activity(const ActivityRequest& request, LlmAdapter* llm,
                               Rng& rng);

std::string next_activity_prompt(const ActivityRequest& request);

struct DayEntry {
  Activity activity;
  const Poi* poi = nullptr;
  bool anchored = false;
  std::vector<std::string> reasons;
};

struct DayTrace {
  std::string agent_id;
  int day_index = 0;
  std::vector<DayEntry> entries;
  bool failed = false;
  std::string failure;
};

// Full mutable state of one simulated agent.
struct Agent {
  Persona persona;
  Role role = Role::Unemployed;
  const Poi* home = nullptr;
  const Poi* anchor = nullptr;
  AgentMemory memory;
  std::shared_ptr<LlmAdapter> llm;  // null for template/physical-only runs
  Rng rng{0};
};

// Binds a persona to its store anchors. Throws DataError when the persona's
// home or anchor POI is missing from the store.
Agent make_agent(Persona persona, const PoiStore& store, const PersonaConfig& config,
                 const MemoryParams& memory, std::shared_ptr<LlmAdapter> llm,
                 std::uint64_t seed);

struct DayModules {
  const PoiStore& store;
  const EcdfTable& ecdfs;
  PersonaConfig persona;
  PhysicalModelParams physical;
  DestinationStrategy strategy = DestinationStrategy::Physical;
  ActivityEngine engine = ActivityEngine::Template;
  double radius_km = 3.0;
  std::map<std::string, double, std::less<>> radius_by_category;
  std::size_t max_listed_candidates = 30;
  int day_start_minutes = 0;

  double radius_for(std::string_view category) const;
};

// Generates activities from the configured day start until midnight,
// resolving each to a POI (anchors bind to the persona's fixed home and
// work/school POIs), records visits, and closes the day in memory.
DayTrace run_day(Agent& agent, int day_index, const DayModules& modules);

}  // namespace trajsim
