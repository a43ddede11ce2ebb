#include "trajsim/activity.hpp"

#include <algorithm>
#include <cstdio>

#include <spdlog/spdlog.h>

#include "trajsim/errors.hpp"
#include "trajsim/llm_adapter.hpp"

namespace trajsim {

ActivityEngine parse_activity_engine(std::string_view text) {
  if (text == "template") return ActivityEngine::Template;
  if (text == "llm") return ActivityEngine::Llm;
  throw ConfigError("activity.engine must be 'llm' or 'template', got '" +
                    std::string(text) + "'");
}

std::string_view to_string(ActivityEngine engine) {
  return engine == ActivityEngine::Template ? "template" : "llm";
}

namespace {

struct Choice {
  const char* activity;
  double weight;
};

struct Block {
  int start;
  int end;
  std::vector<Choice> choices;
  int nominal;  // 0: fill to the end of the block
};

const std::vector<Block>& schedule_for(Role role) {
  static const std::vector<Block> employee = {
      {0, 420, {{"sleep", 1}}, 0},
      {420, 480, {{"meal", 1}}, 0},
      {480, 720, {{"work", 1}}, 0},
      {720, 780, {{"meal", 1}}, 0},
      {780, 1080, {{"work", 1}}, 0},
      {1080, 1200,
       {{"leisure", 1}, {"sports and exercise", 1}, {"shopping", 1},
        {"errands", 0.5}, {"rest", 1}},
       60},
      {1200, 1260, {{"meal", 1}}, 0},
      {1260, 1380, {{"leisure", 1}, {"rest", 1.5}}, 60},
      {1380, 1440, {{"sleep", 1}}, 0},
  };
  static const std::vector<Block> student = {
      {0, 450, {{"sleep", 1}}, 0},
      {450, 510, {{"meal", 1}}, 0},
      {510, 720, {{"study", 1}}, 0},
      {720, 780, {{"meal", 1}}, 0},
      {780, 960, {{"study", 1}}, 0},
      {960, 1140,
       {{"leisure", 1}, {"sports and exercise", 1}, {"shopping", 0.5},
        {"rest", 1}},
       60},
      {1140, 1200, {{"meal", 1}}, 0},
      {1200, 1380, {{"leisure", 1}, {"rest", 1}, {"study", 0.5}}, 60},
      {1380, 1440, {{"sleep", 1}}, 0},
  };
  static const std::vector<Block> at_home = {
      {0, 450, {{"sleep", 1}}, 0},
      {450, 510, {{"meal", 1}}, 0},
      {510, 720,
       {{"errands", 1}, {"shopping", 1}, {"leisure", 1},
        {"sports and exercise", 1}, {"rest", 1}},
       90},
      {720, 780, {{"meal", 1}}, 0},
      {780, 1080,
       {{"errands", 0.5}, {"shopping", 1}, {"leisure", 1},
        {"sports and exercise", 1}, {"rest", 1}},
       90},
      {1080, 1140, {{"meal", 1}}, 0},
      {1140, 1320, {{"leisure", 1}, {"rest", 1.5}}, 90},
      {1320, 1440, {{"sleep", 1}}, 0},
  };
  switch (role) {
    case Role::Employee: return employee;
    case Role::Student: return student;
    case Role::Unemployed:
    case Role::Retired: return at_home;
  }
  return at_home;
}

std::string clock_text(int minutes) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60 % 100, minutes % 60);
  return buf;
}

int truncate_at_midnight(int clock, int duration) {
  return std::min(duration, kMinutesPerDay - clock);
}

}  // namespace

ActivityProposal template_next_activity(const ActivityRequest& request, Rng& rng) {
  const auto& schedule = schedule_for(request.role);
  const int clock = request.clock;
  const Block* block = &schedule.back();
  for (const Block& b : schedule) {
    if (clock >= b.start && clock < b.end) {
      block = &b;
      break;
    }
  }

  const ActivityLocationList& list = request.persona.activity_locations;
  std::vector<std::pair<std::string, double>> options;
  double total = 0.0;
  for (const Choice& c : block->choices) {
    if (!list.contains(c.activity)) continue;
    double weight = c.weight;
    if (std::string_view(c.activity) == "leisure") {
      weight *= 0.8 + 0.4 * request.persona.big_five.extraversion;
    }
    options.emplace_back(c.activity, weight);
    total += weight;
  }

  std::string activity;
  if (options.size() == 1) {
    activity = options.front().first;
  } else if (!options.empty()) {
    const double u = rng.uniform() * total;
    double cumulative = 0.0;
    activity = options.back().first;
    for (const auto& [name, weight] : options) {
      cumulative += weight;
      if (u < cumulative) {
        activity = name;
        break;
      }
    }
  } else if (list.contains("rest")) {
    activity = "rest";
  } else {
    activity = list.entries.begin()->first;
  }

  const auto& categories = list.categories_for(activity);
  const std::string& category =
      categories.size() == 1 ? categories.front() : categories[rng.below(categories.size())];

  const int remaining = block->end - clock;
  int duration = block->nominal > 0 ? std::min(block->nominal, remaining) : remaining;
  if (block->end < kMinutesPerDay) {
    duration += static_cast<int>(
        rng.uniform_int(-kTemplateJitterMinutes, kTemplateJitterMinutes));
  }
  duration = std::clamp(duration, kMinActivityMinutes, kMaxActivityMinutes);

  ActivityProposal proposal;
  proposal.activity = {activity, category, truncate_at_midnight(clock, duration), clock};
  return proposal;
}

std::string next_activity_prompt(const ActivityRequest& request) {
  std::string routine;
  for (const Activity& a : request.routine) {
    if (!routine.empty()) routine += "; ";
    routine += clock_text(a.start) + "-" + clock_text(a.end()) + " " +
               a.activity_type + " at " + a.location_category;
  }
  if (routine.empty()) routine = "nothing yet";
  const nlohmann::json locations = request.persona.activity_locations.entries;
  std::string persona = describe(request.persona);
  if (!request.persona.goals.empty()) persona += ". Goals: " + request.persona.goals;
  return prompt_template("next_activity")
      .render({{"persona", persona},
               {"activity_locations", locations.dump()},
               {"day", std::to_string(request.day_index)},
               {"routine", routine},
               {"history", std::string(request.memory_summary)},
               {"clock", clock_text(request.clock)},
               {"minute", std::to_string(request.clock)}});
}

ActivityProposal next_activity(const ActivityRequest& request, LlmAdapter* llm,
                               Rng& rng) {
  if (request.clock < 0 || request.clock >= kMinutesPerDay) {
    throw std::invalid_argument("next_activity: clock must be in [0, 1440)");
  }
  if (!llm) return template_next_activity(request, rng);

  const ActivityLocationList& list = request.persona.activity_locations;
  const std::string base = next_activity_prompt(request);
  std::string prompt = base;
  std::string_view failure = reason::kActivityLlmInvalid;
  for (int attempt = 0; attempt < 2; ++attempt) {
    nlohmann::json value;
    try {
      value = llm->complete(prompt, ResponseSchema::next_activity()).value;
    } catch (const LlmError& e) {
      failure = reason::kActivityLlmError;
      spdlog::warn("agent {}: next-activity LLM failed ({}), using template",
                   request.persona.id, e.what());
      break;
    }
    const auto activity = value.at("activity").get<std::string>();
    const auto category = value.at("category").get<std::string>();
    const auto duration = value.at("duration_minutes").get<long long>();
    std::string problem;
    if (!list.contains(activity)) {
      problem = "activity '" + activity + "' is not one of the listed activities";
    } else if (!list.allows(activity, category)) {
      problem = "category '" + category + "' is not listed for '" + activity + "'";
    } else if (duration < kMinActivityMinutes || duration > kMaxActivityMinutes) {
      problem = "duration_minutes must be between 5 and 960";
    }
    if (problem.empty()) {
      ActivityProposal proposal;
      proposal.activity = {activity, category,
                           truncate_at_midnight(request.clock, static_cast<int>(duration)),
                           request.clock};
      return proposal;
    }
    prompt = base + "\n\nYour previous reply was rejected: " + problem + ".";
  }
  if (failure == reason::kActivityLlmInvalid) {
    spdlog::warn("agent {}: next-activity LLM reply invalid twice, using template",
                 request.persona.id);
  }
  ActivityProposal proposal = template_next_activity(request, rng);
  proposal.reasons.emplace_back(failure);
  return proposal;
}

Agent make_agent(Persona persona, const PoiStore& store, const PersonaConfig& config,
                 const MemoryParams& memory, std::shared_ptr<LlmAdapter> llm,
                 std::uint64_t seed) {
  Agent agent{.persona = std::move(persona),
              .role = Role::Unemployed,
              .home = nullptr,
              .anchor = nullptr,
              .memory = AgentMemory(memory),
              .llm = std::move(llm),
              .rng = Rng(seed)};
  agent.role = config.role_of(agent.persona.employment);
  agent.home = store.find(agent.persona.home_poi);
  if (!agent.home) {
    throw DataError("persona " + agent.persona.id + ": home POI '" +
                    agent.persona.home_poi + "' not in store");
  }
  if (agent.home->category != config.home_category) {
    throw DataError("persona " + agent.persona.id + ": home POI '" +
                    agent.home->id + "' is not of category '" +
                    config.home_category + "'");
  }
  if (agent.persona.anchor_poi) {
    agent.anchor = store.find(*agent.persona.anchor_poi);
    if (!agent.anchor) {
      throw DataError("persona " + agent.persona.id + ": workplace/school POI '" +
                      *agent.persona.anchor_poi + "' not in store");
    }
  }
  return agent;
}

double DayModules::radius_for(std::string_view category) const {
  auto it = radius_by_category.find(category);
  return it == radius_by_category.end() ? radius_km : it->second;
}

DayTrace run_day(Agent& agent, int day_index, const DayModules& modules) {
  DayTrace trace;
  trace.agent_id = agent.persona.id;
  trace.day_index = day_index;

  LlmAdapter* activity_llm =
      modules.engine == ActivityEngine::Llm ? agent.llm.get() : nullptr;
  const std::string memory_summary = agent.memory.context_summary();
  std::vector<Activity> routine;
  GeoPoint current = agent.home->location;
  int clock = modules.day_start_minutes;

  while (clock < kMinutesPerDay) {
    const ActivityRequest request{agent.persona, agent.role, routine,
                                  memory_summary, clock, day_index};
    ActivityProposal proposal = next_activity(request, activity_llm, agent.rng);
    const Activity& activity = proposal.activity;

    DayEntry entry;
    entry.activity = activity;
    entry.reasons = std::move(proposal.reasons);
    if (activity.location_category == modules.persona.home_category) {
      entry.poi = agent.home;
      entry.anchored = true;
    } else if (agent.anchor && activity.location_category == agent.anchor->category) {
      entry.poi = agent.anchor;
      entry.anchored = true;
    } else {
      try {
        const double radius = modules.radius_for(activity.location_category);
        Selection selection;
        if (modules.strategy == DestinationStrategy::Llm && agent.llm) {
          LlmDestinationRequest dest{
              .goals = agent.persona.goals,
              .activity = activity.activity_type,
              .category = activity.location_category,
              .current = current,
              .radius_km = radius,
              .day_index = day_index,
              .history_k = agent.memory.params().history_k,
              .max_listed_candidates = modules.max_listed_candidates};
          selection = select_llm(*agent.llm, agent.memory, modules.store,
                                 modules.ecdfs, dest, modules.physical, agent.rng);
        } else {
          selection = select_physical(agent.memory.counter(), modules.store,
                                      modules.ecdfs, current,
                                      activity.location_category, radius,
                                      modules.physical, agent.rng);
        }
        entry.poi = selection.poi;
        for (auto& r : selection.reasons) entry.reasons.push_back(std::move(r));
      } catch (const CategoryError& e) {
        trace.failed = true;
        trace.failure = "agent " + agent.persona.id + ", day " +
                        std::to_string(day_index) + ", activity '" +
                        activity.activity_type + "': " + e.what();
        spdlog::error("{}", trace.failure);
        agent.memory.close_day(day_index);
        return trace;
      }
    }

    agent.memory.record_visit(VisitRecord{
        .day_index = day_index,
        .start = activity.start,
        .duration = activity.duration,
        .activity_type = activity.activity_type,
        .category = activity.location_category,
        .poi_id = entry.poi->id,
        .location = entry.poi->location,
        .anchored = entry.anchored});
    routine.push_back(activity);
    current = entry.poi->location;
    clock = activity.end();
    trace.entries.push_back(std::move(entry));
  }
  agent.memory.close_day(day_index);
  return trace;
}

}  // namespace trajsim
