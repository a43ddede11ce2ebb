#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajsim/frequency_model.hpp"
#include "trajsim/geo.hpp"
#include "trajsim/poi_store.hpp"
#include "trajsim/rng.hpp"
#include "trajsim/spatial_model.hpp"

namespace trajsim {

class AgentMemory;
class LlmAdapter;

enum class DestinationStrategy { Physical, Llm };

DestinationStrategy parse_destination_strategy(std::string_view text);
std::string_view to_string(DestinationStrategy strategy);

// Fallback reason codes attached to trace records.
namespace reason {
inline constexpr std::string_view kRadiusExpanded = "radius_expanded";
inline constexpr std::string_view kCategoryWide = "category_wide";
inline constexpr std::string_view kDestinationInvalidId = "destination_llm_invalid_id";
inline constexpr std::string_view kDestinationLlmError = "destination_llm_error";
inline constexpr std::string_view kActivityLlmInvalid = "activity_llm_invalid";
inline constexpr std::string_view kActivityLlmError = "activity_llm_error";
}  // namespace reason

struct CandidateSet {
  std::vector<const Poi*> pois;  // ascending distance, ties by id
  double effective_radius_km = 0.0;
  int doublings = 0;
  bool category_wide = false;
};

inline constexpr int kMaxRadiusDoublings = 6;

// query_radius, doubling the radius up to kMaxRadiusDoublings times, then
// every POI of the category. Throws CategoryError if the category has none.
CandidateSet candidate_set(const PoiStore& store, const GeoPoint& current,
                           std::string_view category, double radius_km);

// P_i = Ws_i * Wf_i / sum_j Ws_j * Wf_j. Throws std::invalid_argument on
// mismatched or empty inputs and std::domain_error when every product is 0.
std::vector<double> selection_probabilities(std::span<const double> spatial,
                                            std::span<const double> frequency);

// Inverse-CDF draw over the cumulative sum.
std::size_t sample_categorical(std::span<const double> probabilities, Rng& rng);

struct PhysicalModelParams {
  ImpedanceParams impedance;
  DeterrenceMode mode = DeterrenceMode::Multiply;
  double sigma = 0.1;
  Psi psi = Psi::Identity;

  void validate() const;
};

// Everything the physical model computes for one decision.
struct SelectionContext {
  GeoPoint current;
  std::string category;
  double radius_km = 0.0;
  std::vector<const Poi*> candidates;
  std::vector<double> spatial;
  std::vector<double> frequency;
  std::vector<double> probabilities;
};

// Scores an explicit candidate list: spatial weights, lossy-count
// frequencies (0 for unseen POIs), rank normalization against the category
// ECDF, distribution mapping, frequency weights, and fusion.
SelectionContext score_candidates(std::vector<const Poi*> candidates,
                                  const GeoPoint& current,
                                  std::string_view category, double radius_km,
                                  const LossyCounter& counter,
                                  const CategoryEcdf& ecdf,
                                  const PhysicalModelParams& params);

struct Selection {
  const Poi* poi = nullptr;
  SelectionContext context;
  std::vector<std::string> reasons;
};

Selection select_physical(const LossyCounter& counter, const PoiStore& store,
                          const EcdfTable& ecdfs, const GeoPoint& current,
                          std::string_view category, double radius_km,
                          const PhysicalModelParams& params, Rng& rng);

struct LlmDestinationRequest {
  std::string goals;
  std::string activity;
  std::string category;
  GeoPoint current;
  double radius_km = 3.0;
  int day_index = 0;
  std::size_t history_k = 5;
  std::size_t max_listed_candidates = 30;
};

// Builds a prompt from the persona goals, memory history for the category
// and the candidate list, and asks the model for {"poi_id": ...}. An id
// outside the candidates is retried once; a second miss or an adapter
// failure falls back to select_physical.
Selection select_llm(LlmAdapter& llm, AgentMemory& memory, const PoiStore& store,
                     const EcdfTable& ecdfs, const LlmDestinationRequest& request,
                     const PhysicalModelParams& params, Rng& rng);

// Rendered destination prompt; exposed for inspection in tests.
std::string destination_prompt(const LlmDestinationRequest& request,
                               const CandidateSet& candidates,
                               AgentMemory& memory);

}  // namespace trajsim
