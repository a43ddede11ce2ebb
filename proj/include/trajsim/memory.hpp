#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajsim/frequency_model.hpp"
#include "trajsim/geo.hpp"

namespace trajsim {

struct VisitRecord {
  int day_index = 0;
  int start = 0;     // minutes since midnight
  int duration = 0;  // minutes
  std::string activity_type;
  std::string category;
  std::string poi_id;
  GeoPoint location;
  // True when the POI was a fixed home/work/school anchor rather than the
  // result of a destination selection.
  bool anchored = false;
};

enum class MemoryLevel { Daily, Weekly, Monthly };

std::string_view to_string(MemoryLevel level);

struct TagCounts {
  std::uint64_t events = 0;      // activities
  std::uint64_t entities = 0;    // distinct POIs
  std::uint64_t actions = 0;     // non-anchor destination selections
  std::uint64_t attributes = 0;  // distinct categories

  std::uint64_t total() const noexcept {
    return events + entities + actions + attributes;
  }
  TagCounts& operator+=(const TagCounts& other) noexcept;
  friend bool operator==(const TagCounts&, const TagCounts&) = default;
};

struct MemoryItem {
  MemoryLevel level = MemoryLevel::Daily;
  int period_key = 0;  // day, week or month index
  std::string summary_text;
  TagCounts tags;
  int created_day = 0;
  std::uint64_t access_count = 0;
  int last_access_day = 0;
  // Set once the item has been folded into the next level up; only rolled-up
  // items may be pruned.
  bool rolled_up = false;
  std::set<std::string> categories;
};

struct DensityWeights {
  double events = 0.3;
  double entities = 0.3;
  double actions = 0.25;
  double attributes = 0.15;

  // Nonnegative, with events and entities weighted at least as high as
  // attributes. Throws ConfigError.
  void validate() const;
};

struct ImportanceParams {
  double density_gain = 4.0;  // a
  double recency_gain = 2.0;  // b
  double access_gain = 2.0;   // c
  double bias = 2.0;
  double tau_days = 7.0;
  double access_cap = 100.0;

  void validate() const;
};

struct MemoryParams {
  DensityWeights density;
  ImportanceParams importance;
  double prune_threshold = 0.5;
  std::size_t history_k = 5;
  double epsilon = 0.01;

  void validate() const;
};

// Weighted tag mean: sum(w * count) / max(1, sum(count)).
double info_density(const MemoryItem& item, const DensityWeights& weights);

double sigmoid(double x) noexcept;

// sigmoid(a*D + b*R + c*F - bias).
double importance_score(double density, double recency, double access,
                        const ImportanceParams& params) noexcept;

// Recency R = exp(-(now - last_access) / tau); access
// F = ln(1 + access_count) / ln(1 + access_cap).
double importance(const MemoryItem& item, int now_day,
                  const DensityWeights& weights, const ImportanceParams& params);

struct HistoryResult {
  std::vector<VisitRecord> visits;
  std::optional<MemoryItem> summary;

  bool empty() const noexcept { return visits.empty() && !summary; }
};

// Per-agent memory: an append-only raw visit log, a lossy counter over
// visited POI ids, and daily/weekly/monthly summaries. Weeks are fixed 7-day
// windows from day 0 and months fixed 28-day windows. Single owner.
class AgentMemory {
 public:
  explicit AgentMemory(MemoryParams params = {});

  void record_visit(VisitRecord record);

  MemoryItem summarize_daily(int day_index);
  MemoryItem summarize_weekly(int week_index);
  MemoryItem summarize_monthly(int month_index);

  // Daily summary, any rollups the day completes, then pruning at the
  // configured threshold.
  void close_day(int day_index);

  // Removes rolled-up items scoring below `threshold`, keeping the newest
  // item of each level. Returns the number removed.
  std::size_t prune(double threshold, int now_day);

  // The k most recent visits of `category` (ties by poi_id) and the
  // highest-importance surviving summary that mentions it. Touching a
  // summary counts as an access.
  HistoryResult retrieve_history(std::string_view category, std::size_t k,
                                 int now_day);

  // Newest surviving summary per level, for prompts.
  std::string context_summary() const;

  double importance_of(const MemoryItem& item, int now_day) const;

  const std::vector<VisitRecord>& visits() const noexcept { return visits_; }
  const std::vector<MemoryItem>& items() const noexcept { return items_; }
  const LossyCounter& counter() const noexcept { return counter_; }
  const MemoryParams& params() const noexcept { return params_; }

  // Items ever created per level, including pruned ones.
  std::size_t created(MemoryLevel level) const noexcept;

  // One JSON object per surviving item with every scoring input.
  std::vector<nlohmann::json> dump(int now_day) const;

 private:
  const MemoryItem* find(MemoryLevel level, int period_key) const;
  MemoryItem& store(MemoryItem item);
  MemoryItem rollup(MemoryLevel level, int period_key, MemoryLevel child_level,
                    int first_child, int child_count, int first_day,
                    int day_count);

  MemoryParams params_;
  LossyCounter counter_;
  std::vector<VisitRecord> visits_;
  std::vector<MemoryItem> items_;
  std::size_t created_[3] = {0, 0, 0};
};

}  // namespace trajsim
