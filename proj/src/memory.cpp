#include "trajsim/memory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

#include "trajsim/errors.hpp"

namespace trajsim {

std::string_view to_string(MemoryLevel level) {
  switch (level) {
    case MemoryLevel::Daily: return "daily";
    case MemoryLevel::Weekly: return "weekly";
    case MemoryLevel::Monthly: return "monthly";
  }
  return "unknown";
}

TagCounts& TagCounts::operator+=(const TagCounts& other) noexcept {
  events += other.events;
  entities += other.entities;
  actions += other.actions;
  attributes += other.attributes;
  return *this;
}

void DensityWeights::validate() const {
  for (double w : {events, entities, actions, attributes}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("memory.density weights must be finite and >= 0");
    }
  }
  if (events < attributes || entities < attributes) {
    throw ConfigError(
        "memory.density: events and entities must weigh at least as much as "
        "attributes");
  }
}

void ImportanceParams::validate() const {
  if (!(density_gain > 0.0 && recency_gain > 0.0 && access_gain > 0.0)) {
    throw ConfigError("memory importance gains must be > 0");
  }
  if (!(tau_days > 0.0)) throw ConfigError("memory.tau_days must be > 0");
  if (!(access_cap > 0.0)) throw ConfigError("memory.access_cap must be > 0");
  if (!std::isfinite(bias)) throw ConfigError("memory.bias must be finite");
}

void MemoryParams::validate() const {
  density.validate();
  importance.validate();
  if (!(prune_threshold >= 0.0 && prune_threshold <= 1.0)) {
    throw ConfigError("memory.prune_threshold must be in [0, 1]");
  }
  if (history_k == 0) throw ConfigError("memory.history_k must be > 0");
}

double info_density(const MemoryItem& item, const DensityWeights& w) {
  const TagCounts& t = item.tags;
  const double weighted = w.events * static_cast<double>(t.events) +
                          w.entities * static_cast<double>(t.entities) +
                          w.actions * static_cast<double>(t.actions) +
                          w.attributes * static_cast<double>(t.attributes);
  return weighted / std::max(1.0, static_cast<double>(t.total()));
}

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

double importance_score(double density, double recency, double access,
                        const ImportanceParams& p) noexcept {
  return sigmoid(p.density_gain * density + p.recency_gain * recency +
                 p.access_gain * access - p.bias);
}

double importance(const MemoryItem& item, int now_day,
                  const DensityWeights& weights, const ImportanceParams& p) {
  const double density = info_density(item, weights);
  const double recency =
      std::exp(-static_cast<double>(now_day - item.last_access_day) / p.tau_days);
  const double access = std::log1p(static_cast<double>(item.access_count)) /
                        std::log1p(p.access_cap);
  return importance_score(density, recency, access, p);
}

AgentMemory::AgentMemory(MemoryParams params)
    : params_(std::move(params)), counter_(params_.epsilon) {
  params_.validate();
}

void AgentMemory::record_visit(VisitRecord record) {
  counter_.observe(record.poi_id);
  visits_.push_back(std::move(record));
}

const MemoryItem* AgentMemory::find(MemoryLevel level, int period_key) const {
  for (const MemoryItem& item : items_) {
    if (item.level == level && item.period_key == period_key) return &item;
  }
  return nullptr;
}

MemoryItem& AgentMemory::store(MemoryItem item) {
  ++created_[static_cast<int>(item.level)];
  items_.push_back(std::move(item));
  return items_.back();
}

std::size_t AgentMemory::created(MemoryLevel level) const noexcept {
  return created_[static_cast<int>(level)];
}

namespace {

std::string clock_text(int minutes) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60 % 100, minutes % 60);
  return buf;
}

}  // namespace

MemoryItem AgentMemory::summarize_daily(int day_index) {
  if (const MemoryItem* existing = find(MemoryLevel::Daily, day_index)) {
    return *existing;
  }
  MemoryItem item;
  item.level = MemoryLevel::Daily;
  item.period_key = day_index;
  item.created_day = day_index;
  item.last_access_day = day_index;

  std::set<std::string_view> pois;
  std::string text = "day " + std::to_string(day_index) + ":";
  bool first = true;
  for (const VisitRecord& v : visits_) {
    if (v.day_index != day_index) continue;
    ++item.tags.events;
    if (!v.anchored) ++item.tags.actions;
    pois.insert(v.poi_id);
    item.categories.insert(v.category);
    text += first ? " " : "; ";
    first = false;
    text += clock_text(v.start) + " " + v.activity_type + " at " + v.category +
            " (" + v.poi_id + ", " + std::to_string(v.duration) + " min)";
  }
  item.tags.entities = pois.size();
  item.tags.attributes = item.categories.size();
  item.summary_text = item.tags.events == 0 ? text + " no activities" : text;
  return store(std::move(item));
}

MemoryItem AgentMemory::rollup(MemoryLevel level, int period_key,
                               MemoryLevel child_level, int first_child,
                               int child_count, int first_day, int day_count) {
  if (const MemoryItem* existing = find(level, period_key)) return *existing;

  // Children are created first (as empty sentinels when missing) so the
  // pointer-free loop below can mark them.
  for (int key = first_child; key < first_child + child_count; ++key) {
    if (find(child_level, key)) continue;
    if (child_level == MemoryLevel::Daily) {
      summarize_daily(key);
    } else {
      summarize_weekly(key);
    }
  }

  MemoryItem item;
  item.level = level;
  item.period_key = period_key;
  item.created_day = first_day + day_count - 1;
  item.last_access_day = item.created_day;
  for (MemoryItem& child : items_) {
    if (child.level != child_level || child.period_key < first_child ||
        child.period_key >= first_child + child_count) {
      continue;
    }
    item.tags += child.tags;
    child.rolled_up = true;
  }

  std::map<std::pair<std::string, std::string>, int> pair_counts;
  for (const VisitRecord& v : visits_) {
    if (v.day_index < first_day || v.day_index >= first_day + day_count) continue;
    ++pair_counts[{v.activity_type, v.category}];
    item.categories.insert(v.category);
  }
  std::vector<std::pair<std::pair<std::string, std::string>, int>> ranked(
      pair_counts.begin(), pair_counts.end());
  // Map order is lexicographic already; a stable sort keeps it for ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > 3) ranked.resize(3);

  std::string text = std::string(to_string(level)) + " " +
                     std::to_string(period_key) + " (days " +
                     std::to_string(first_day) + "-" +
                     std::to_string(first_day + day_count - 1) + "):";
  if (ranked.empty()) text += " no activities";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    text += i ? "; " : " ";
    text += ranked[i].first.first + " at " + ranked[i].first.second + " x" +
            std::to_string(ranked[i].second);
  }
  item.summary_text = std::move(text);
  return store(std::move(item));
}

MemoryItem AgentMemory::summarize_weekly(int week_index) {
  return rollup(MemoryLevel::Weekly, week_index, MemoryLevel::Daily,
                week_index * 7, 7, week_index * 7, 7);
}

MemoryItem AgentMemory::summarize_monthly(int month_index) {
  return rollup(MemoryLevel::Monthly, month_index, MemoryLevel::Weekly,
                month_index * 4, 4, month_index * 28, 28);
}

void AgentMemory::close_day(int day_index) {
  summarize_daily(day_index);
  const int completed = day_index + 1;
  if (completed % 7 == 0) summarize_weekly(completed / 7 - 1);
  if (completed % 28 == 0) summarize_monthly(completed / 28 - 1);
  prune(params_.prune_threshold, day_index);
}

double AgentMemory::importance_of(const MemoryItem& item, int now_day) const {
  return importance(item, now_day, params_.density, params_.importance);
}

std::size_t AgentMemory::prune(double threshold, int now_day) {
  int newest[3] = {-1, -1, -1};
  for (const MemoryItem& item : items_) {
    int& n = newest[static_cast<int>(item.level)];
    n = std::max(n, item.period_key);
  }
  const std::size_t before = items_.size();
  std::erase_if(items_, [&](const MemoryItem& item) {
    if (!item.rolled_up) return false;
    if (item.period_key == newest[static_cast<int>(item.level)]) return false;
    return importance_of(item, now_day) < threshold;
  });
  return before - items_.size();
}

HistoryResult AgentMemory::retrieve_history(std::string_view category,
                                            std::size_t k, int now_day) {
  HistoryResult result;
  for (const VisitRecord& v : visits_) {
    if (v.category == category) result.visits.push_back(v);
  }
  std::sort(result.visits.begin(), result.visits.end(),
            [](const VisitRecord& a, const VisitRecord& b) {
              return std::tie(b.day_index, b.start, a.poi_id) <
                     std::tie(a.day_index, a.start, b.poi_id);
            });
  if (result.visits.size() > k) result.visits.resize(k);

  MemoryItem* best = nullptr;
  double best_score = -1.0;
  for (MemoryItem& item : items_) {
    if (!item.categories.contains(std::string(category))) continue;
    const double score = importance_of(item, now_day);
    // Ties go to the later-created item.
    if (score > best_score ||
        (score == best_score && best && item.created_day > best->created_day)) {
      best = &item;
      best_score = score;
    }
  }
  if (best) {
    ++best->access_count;
    best->last_access_day = std::max(best->last_access_day, now_day);
    result.summary = *best;
  }
  return result;
}

std::string AgentMemory::context_summary() const {
  std::string out;
  for (MemoryLevel level :
       {MemoryLevel::Monthly, MemoryLevel::Weekly, MemoryLevel::Daily}) {
    const MemoryItem* newest = nullptr;
    for (const MemoryItem& item : items_) {
      if (item.level == level && (!newest || item.period_key > newest->period_key)) {
        newest = &item;
      }
    }
    if (!newest) continue;
    if (!out.empty()) out += "\n";
    out += newest->summary_text;
  }
  return out.empty() ? "no history yet" : out;
}

std::vector<nlohmann::json> AgentMemory::dump(int now_day) const {
  std::vector<nlohmann::json> out;
  out.reserve(items_.size());
  for (const MemoryItem& item : items_) {
    out.push_back({
        {"level", to_string(item.level)},
        {"period_key", item.period_key},
        {"summary_text", item.summary_text},
        {"tag_counts",
         {{"events", item.tags.events},
          {"entities", item.tags.entities},
          {"actions", item.tags.actions},
          {"attributes", item.tags.attributes}}},
        {"created_day", item.created_day},
        {"access_count", item.access_count},
        {"last_access_day", item.last_access_day},
        {"rolled_up", item.rolled_up},
        {"categories", item.categories},
        {"info_density", info_density(item, params_.density)},
        {"importance", importance_of(item, now_day)},
    });
  }
  return out;
}

}  // namespace trajsim
