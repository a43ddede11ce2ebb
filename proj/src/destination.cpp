#include "trajsim/destination.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "trajsim/errors.hpp"
#include "trajsim/llm_adapter.hpp"
#include "trajsim/memory.hpp"

namespace trajsim {

DestinationStrategy parse_destination_strategy(std::string_view text) {
  if (text == "physical") return DestinationStrategy::Physical;
  if (text == "llm") return DestinationStrategy::Llm;
  throw ConfigError("destination.strategy must be 'physical' or 'llm', got '" +
                    std::string(text) + "'");
}

std::string_view to_string(DestinationStrategy strategy) {
  return strategy == DestinationStrategy::Physical ? "physical" : "llm";
}

void PhysicalModelParams::validate() const {
  impedance.validate();
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    throw ConfigError("frequency.sigma must be in [0, 1]");
  }
}

CandidateSet candidate_set(const PoiStore& store, const GeoPoint& current,
                           std::string_view category, double radius_km) {
  if (!(radius_km > 0.0)) {
    throw std::invalid_argument("candidate_set: radius must be > 0");
  }
  if (!store.has_category(category)) throw CategoryError(std::string(category));

  CandidateSet set;
  double radius = radius_km;
  for (int doubling = 0; doubling <= kMaxRadiusDoublings; ++doubling) {
    set.pois = store.query_radius(current, radius, category);
    if (!set.pois.empty()) {
      set.effective_radius_km = radius;
      set.doublings = doubling;
      return set;
    }
    radius *= 2.0;
  }
  // Nothing within 64x the radius: the whole category, still distance-ordered.
  std::vector<std::pair<double, const Poi*>> all;
  for (const Poi* p : store.of_category(category)) {
    all.emplace_back(haversine(current, p->location), p);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second->id < b.second->id;
  });
  set.pois.clear();
  for (const auto& [d, p] : all) set.pois.push_back(p);
  set.effective_radius_km = all.back().first;
  set.doublings = kMaxRadiusDoublings;
  set.category_wide = true;
  return set;
}

std::vector<double> selection_probabilities(std::span<const double> spatial,
                                            std::span<const double> frequency) {
  if (spatial.size() != frequency.size() || spatial.empty()) {
    throw std::invalid_argument(
        "selection_probabilities: weight lists must be nonempty and equal length");
  }
  std::vector<double> products(spatial.size());
  double total = 0.0;
  for (std::size_t i = 0; i < spatial.size(); ++i) {
    products[i] = spatial[i] * frequency[i];
    total += products[i];
  }
  if (!(total > 0.0)) {
    throw std::domain_error("selection_probabilities: all products are zero");
  }
  for (double& p : products) p /= total;
  return products;
}

std::size_t sample_categorical(std::span<const double> probabilities, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    cumulative += probabilities[i];
    last_positive = i;
    if (u < cumulative) return i;
  }
  // Rounding left the cumulative sum a hair below u.
  return last_positive;
}

SelectionContext score_candidates(std::vector<const Poi*> candidates,
                                  const GeoPoint& current,
                                  std::string_view category, double radius_km,
                                  const LossyCounter& counter,
                                  const CategoryEcdf& ecdf,
                                  const PhysicalModelParams& params) {
  if (candidates.empty()) throw EmptyCandidateSet();
  SelectionContext ctx;
  ctx.current = current;
  ctx.category = std::string(category);
  ctx.radius_km = radius_km;
  ctx.candidates = std::move(candidates);

  std::vector<double> raw_frequency;
  ctx.spatial.reserve(ctx.candidates.size());
  raw_frequency.reserve(ctx.candidates.size());
  for (const Poi* poi : ctx.candidates) {
    ctx.spatial.push_back(spatial_weight(*poi, current, params.impedance, params.mode));
    raw_frequency.push_back(static_cast<double>(counter.estimate(poi->id)));
  }
  const auto z = rank_normalize(raw_frequency, ecdf);
  const auto adjusted = distribution_map(z, params.psi);
  ctx.frequency = frequency_weights(adjusted, params.sigma);
  ctx.probabilities = selection_probabilities(ctx.spatial, ctx.frequency);
  return ctx;
}

Selection select_physical(const LossyCounter& counter, const PoiStore& store,
                          const EcdfTable& ecdfs, const GeoPoint& current,
                          std::string_view category, double radius_km,
                          const PhysicalModelParams& params, Rng& rng) {
  CandidateSet set = candidate_set(store, current, category, radius_km);
  Selection selection;
  if (set.category_wide) {
    selection.reasons.emplace_back(reason::kCategoryWide);
  } else if (set.doublings > 0) {
    selection.reasons.emplace_back(reason::kRadiusExpanded);
  }
  selection.context =
      score_candidates(std::move(set.pois), current, category,
                       set.effective_radius_km, counter, ecdfs.get(category), params);
  selection.poi =
      selection.context.candidates[sample_categorical(selection.context.probabilities, rng)];
  return selection;
}

namespace {

std::string format_km(double km) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", km);
  return buf;
}

std::string format_point(const GeoPoint& p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "(%.5f, %.5f)", p.lat(), p.lon());
  return buf;
}

}  // namespace

std::string destination_prompt(const LlmDestinationRequest& request,
                               const CandidateSet& candidates,
                               AgentMemory& memory) {
  const HistoryResult history =
      memory.retrieve_history(request.category, request.history_k, request.day_index);
  std::string history_text;
  for (const VisitRecord& v : history.visits) {
    if (!history_text.empty()) history_text += "; ";
    history_text += "day " + std::to_string(v.day_index) + " " + v.activity_type +
                    " at " + v.poi_id;
  }
  if (history.summary) {
    if (!history_text.empty()) history_text += "\n";
    history_text += "Summary: " + history.summary->summary_text;
  }
  if (history_text.empty()) history_text = "none";

  std::string listing;
  const std::size_t shown =
      std::min(candidates.pois.size(), request.max_listed_candidates);
  for (std::size_t i = 0; i < shown; ++i) {
    const Poi* poi = candidates.pois[i];
    listing += poi->id + " | " + poi->name + " | " +
               format_km(haversine(request.current, poi->location)) + "\n";
  }

  return prompt_template("destination")
      .render({{"goals", request.goals},
               {"activity", request.activity},
               {"category", request.category},
               {"current", format_point(request.current)},
               {"radius_km", format_km(candidates.effective_radius_km)},
               {"history", history_text},
               {"candidates", listing}});
}

Selection select_llm(LlmAdapter& llm, AgentMemory& memory, const PoiStore& store,
                     const EcdfTable& ecdfs, const LlmDestinationRequest& request,
                     const PhysicalModelParams& params, Rng& rng) {
  CandidateSet set =
      candidate_set(store, request.current, request.category, request.radius_km);
  std::vector<std::string> reasons;
  if (set.category_wide) {
    reasons.emplace_back(reason::kCategoryWide);
  } else if (set.doublings > 0) {
    reasons.emplace_back(reason::kRadiusExpanded);
  }
  const std::size_t listed = std::min(set.pois.size(), request.max_listed_candidates);
  const std::string base = destination_prompt(request, set, memory);

  std::string prompt = base;
  std::string_view failure = reason::kDestinationInvalidId;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string chosen;
    try {
      chosen = llm.complete(prompt, ResponseSchema::destination())
                   .value.at("poi_id")
                   .get<std::string>();
    } catch (const LlmError& e) {
      failure = reason::kDestinationLlmError;
      spdlog::warn("destination LLM failed ({}), using physical model", e.what());
      break;
    }
    for (std::size_t i = 0; i < listed; ++i) {
      if (set.pois[i]->id == chosen) {
        Selection selection;
        selection.poi = set.pois[i];
        selection.context.current = request.current;
        selection.context.category = request.category;
        selection.context.radius_km = set.effective_radius_km;
        selection.context.candidates.assign(set.pois.begin(), set.pois.begin() + listed);
        selection.reasons = std::move(reasons);
        return selection;
      }
    }
    prompt = base + "\n\nYour previous reply named '" + chosen +
             "', which is not in the candidate list. Choose one of the listed ids.";
  }
  if (failure == reason::kDestinationInvalidId) {
    spdlog::warn("destination LLM named no valid candidate twice, using physical model");
  }
  Selection selection = select_physical(memory.counter(), store, ecdfs, request.current,
                                        request.category, request.radius_km, params, rng);
  selection.reasons.insert(selection.reasons.begin(), std::string(failure));
  return selection;
}

}  // namespace trajsim
