#pragma once

#include <stdexcept>
#include <string>

namespace trajsim {

// Bad or inconsistent configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data (CSV rows, trace lines, persona files). Exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A location category that no POI in the store carries.
class CategoryError : public std::runtime_error {
 public:
  explicit CategoryError(std::string category)
      : std::runtime_error("no POI of category '" + category + "' in store"),
        category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

// Scoring was asked to operate on zero candidates; the caller should widen
// the search radius.
class EmptyCandidateSet : public std::runtime_error {
 public:
  EmptyCandidateSet() : std::runtime_error("empty candidate set") {}
};

}  // namespace trajsim
