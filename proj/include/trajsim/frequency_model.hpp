#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajsim/poi_store.hpp"

namespace trajsim {

// Lossy counting over a stream of POI ids (Manku & Motwani). Estimates never
// exceed true counts and undercount by at most epsilon * N. The stream is
// split into buckets of width ceil(1/epsilon); at every bucket boundary the
// entries whose estimate + max_error falls below the current bucket id are
// evicted.
class LossyCounter {
 public:
  struct Entry {
    std::uint64_t count = 0;
    std::uint64_t max_error = 0;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  explicit LossyCounter(double epsilon = 0.01);

  void observe(std::string_view poi_id);

  // Retained estimates.
  std::map<std::string, std::uint64_t> query() const;
  // Zero for ids not retained.
  std::uint64_t estimate(std::string_view poi_id) const;

  double epsilon() const noexcept { return epsilon_; }
  std::uint64_t bucket_width() const noexcept { return bucket_width_; }
  // Id of the bucket the next observation falls into.
  std::uint64_t current_bucket() const noexcept { return current_bucket_; }
  std::uint64_t n_observed() const noexcept { return n_observed_; }
  const std::map<std::string, Entry, std::less<>>& entries() const noexcept {
    return entries_;
  }

 private:
  double epsilon_;
  std::uint64_t bucket_width_;
  std::uint64_t current_bucket_ = 1;
  std::uint64_t n_observed_ = 0;
  std::map<std::string, Entry, std::less<>> entries_;
};

// Sorted per-POI check-in counts of one category; the target distribution
// for quantile mapping.
struct CategoryEcdf {
  std::string category;
  std::vector<double> sorted_values;

  bool empty() const noexcept { return sorted_values.empty(); }
};

CategoryEcdf build_ecdf(const CheckinLog& checkins, std::string_view category);

// One ECDF per category present in a check-in log. Lookups for absent
// categories return an empty ECDF.
class EcdfTable {
 public:
  EcdfTable() = default;
  explicit EcdfTable(const CheckinLog& checkins);

  const CategoryEcdf& get(std::string_view category) const;

 private:
  std::map<std::string, CategoryEcdf, std::less<>> by_category_;
  CategoryEcdf empty_;
};

// Smallest value whose empirical CDF reaches q, i.e. sorted[ceil(q*m) - 1].
// Returns nullopt for an empty ECDF. q must be in (0, 1].
std::optional<double> inverse_ecdf(const CategoryEcdf& ecdf, double q);

// Same lookup with the quantile given as the exact fraction rank / n.
std::optional<double> inverse_ecdf_at_rank(const CategoryEcdf& ecdf,
                                           std::size_t rank, std::size_t n);

// Quantile-maps candidate frequencies onto the ECDF. Ranks use the "max"
// method (number of candidates with frequency <= f_i), so ties share a value.
// An empty ECDF returns the frequencies unchanged.
std::vector<double> rank_normalize(std::span<const double> frequencies,
                                   const CategoryEcdf& ecdf);

enum class Psi { Identity, Log1p };

Psi parse_psi(std::string_view text);
std::string_view to_string(Psi psi);

// Throws std::domain_error for negative or non-finite inputs.
std::vector<double> distribution_map(std::span<const double> z, Psi psi);

// W_i = (1 - sigma) * f'_i / sum(f') + sigma / n. A zero sum makes the first
// term uniform. Throws EmptyCandidateSet when f' is empty.
std::vector<double> frequency_weights(std::span<const double> adjusted,
                                      double sigma);

}  // namespace trajsim
