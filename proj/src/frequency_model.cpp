#include "trajsim/frequency_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trajsim/errors.hpp"

namespace trajsim {

LossyCounter::LossyCounter(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ConfigError("frequency.epsilon must be in (0, 1)");
  }
  // 1/0.01 is not exact in binary; snap before taking the ceiling.
  bucket_width_ =
      static_cast<std::uint64_t>(std::ceil(1.0 / epsilon - 1e-9));
}

void LossyCounter::observe(std::string_view poi_id) {
  auto it = entries_.find(poi_id);
  if (it != entries_.end()) {
    ++it->second.count;
  } else {
    entries_.emplace(std::string(poi_id), Entry{1, current_bucket_ - 1});
  }
  ++n_observed_;
  if (n_observed_ % bucket_width_ == 0) {
    // Strict comparison: an entry whose bound equals the bucket id may carry
    // exactly epsilon * N true occurrences and must survive.
    std::erase_if(entries_, [&](const auto& kv) {
      return kv.second.count + kv.second.max_error < current_bucket_;
    });
    ++current_bucket_;
  }
}

std::map<std::string, std::uint64_t> LossyCounter::query() const {
  std::map<std::string, std::uint64_t> out;
  for (const auto& [id, entry] : entries_) out.emplace(id, entry.count);
  return out;
}

std::uint64_t LossyCounter::estimate(std::string_view poi_id) const {
  auto it = entries_.find(poi_id);
  return it == entries_.end() ? 0 : it->second.count;
}

CategoryEcdf build_ecdf(const CheckinLog& checkins, std::string_view category) {
  std::map<std::string_view, std::uint64_t> counts;
  for (const Checkin& c : checkins.records()) {
    if (c.category == category) ++counts[c.poi_id];
  }
  CategoryEcdf ecdf;
  ecdf.category = std::string(category);
  ecdf.sorted_values.reserve(counts.size());
  for (const auto& [id, n] : counts) {
    ecdf.sorted_values.push_back(static_cast<double>(n));
  }
  std::sort(ecdf.sorted_values.begin(), ecdf.sorted_values.end());
  return ecdf;
}

EcdfTable::EcdfTable(const CheckinLog& checkins) {
  std::map<std::string, std::map<std::string_view, std::uint64_t>, std::less<>>
      counts;
  for (const Checkin& c : checkins.records()) ++counts[c.category][c.poi_id];
  for (auto& [category, per_poi] : counts) {
    CategoryEcdf ecdf;
    ecdf.category = category;
    for (const auto& [id, n] : per_poi) {
      ecdf.sorted_values.push_back(static_cast<double>(n));
    }
    std::sort(ecdf.sorted_values.begin(), ecdf.sorted_values.end());
    by_category_.emplace(category, std::move(ecdf));
  }
}

const CategoryEcdf& EcdfTable::get(std::string_view category) const {
  auto it = by_category_.find(category);
  return it == by_category_.end() ? empty_ : it->second;
}

std::optional<double> inverse_ecdf(const CategoryEcdf& ecdf, double q) {
  if (ecdf.empty()) return std::nullopt;
  if (!(q > 0.0 && q <= 1.0)) {
    throw std::domain_error("inverse_ecdf: q must be in (0, 1]");
  }
  const double m = static_cast<double>(ecdf.sorted_values.size());
  double position = q * m;
  // Quantiles like 3/10 * 10 land a hair above the integer they represent.
  const double nearest = std::round(position);
  if (std::abs(position - nearest) <= 1e-9 * m) position = nearest;
  const auto index = static_cast<std::size_t>(std::ceil(position)) - 1;
  return ecdf.sorted_values[std::min(index, ecdf.sorted_values.size() - 1)];
}

std::optional<double> inverse_ecdf_at_rank(const CategoryEcdf& ecdf,
                                           std::size_t rank, std::size_t n) {
  if (ecdf.empty()) return std::nullopt;
  if (rank == 0 || rank > n) {
    throw std::domain_error("inverse_ecdf_at_rank: rank must be in [1, n]");
  }
  const std::size_t m = ecdf.sorted_values.size();
  // ceil(rank * m / n) - 1, in integers.
  const std::size_t index = (rank * m + n - 1) / n - 1;
  return ecdf.sorted_values[index];
}

std::vector<double> rank_normalize(std::span<const double> frequencies,
                                   const CategoryEcdf& ecdf) {
  std::vector<double> z(frequencies.begin(), frequencies.end());
  if (ecdf.empty() || frequencies.empty()) return z;

  std::vector<double> sorted(frequencies.begin(), frequencies.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto rank = static_cast<std::size_t>(
        std::upper_bound(sorted.begin(), sorted.end(), frequencies[i]) -
        sorted.begin());
    z[i] = *inverse_ecdf_at_rank(ecdf, rank, n);
  }
  return z;
}

Psi parse_psi(std::string_view text) {
  if (text == "identity") return Psi::Identity;
  if (text == "log1p") return Psi::Log1p;
  throw ConfigError("frequency.psi must be 'identity' or 'log1p', got '" +
                    std::string(text) + "'");
}

std::string_view to_string(Psi psi) {
  return psi == Psi::Identity ? "identity" : "log1p";
}

std::vector<double> distribution_map(std::span<const double> z, Psi psi) {
  std::vector<double> out;
  out.reserve(z.size());
  for (double v : z) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::domain_error("distribution_map: input must be finite and >= 0");
    }
    out.push_back(psi == Psi::Identity ? v : std::log1p(v));
  }
  return out;
}

std::vector<double> frequency_weights(std::span<const double> adjusted,
                                      double sigma) {
  if (adjusted.empty()) throw EmptyCandidateSet();
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    throw std::domain_error("frequency_weights: sigma must be in [0, 1]");
  }
  const double n = static_cast<double>(adjusted.size());
  double total = 0.0;
  for (double v : adjusted) total += v;

  std::vector<double> weights;
  weights.reserve(adjusted.size());
  for (double v : adjusted) {
    const double share = total > 0.0 ? v / total : 1.0 / n;
    weights.push_back((1.0 - sigma) * share + sigma / n);
  }
  return weights;
}

}  // namespace trajsim
