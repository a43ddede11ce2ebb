#pragma once

#include <limits>
#include <string_view>

#include "trajsim/geo.hpp"
#include "trajsim/poi_store.hpp"

namespace trajsim {

// Truncated power-law distance impedance f(d) = (d + r0)^-beta * exp(-d / k).
// k may be +infinity to disable the exponential cutoff.
struct ImpedanceParams {
  double r0_km = 1.5;
  double beta = 1.75;
  double k_km = 400.0;

  // Throws ConfigError unless r0 > 0, beta >= 0, k > 0.
  void validate() const;
};

inline constexpr double kNoCutoff = std::numeric_limits<double>::infinity();

// How the impedance enters the spatial weight. Multiply follows the gravity
// form V * f(d); Divide is the literal V / f(d) variant.
enum class DeterrenceMode { Multiply, Divide };

DeterrenceMode parse_deterrence_mode(std::string_view text);
std::string_view to_string(DeterrenceMode mode);

double impedance(double distance_km, const ImpedanceParams& params);

double spatial_weight(const Poi& poi, const GeoPoint& current,
                      const ImpedanceParams& params, DeterrenceMode mode);

}  // namespace trajsim
