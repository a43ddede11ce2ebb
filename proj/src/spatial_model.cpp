#include "trajsim/spatial_model.hpp"

#include <cmath>
#include <string>

#include "trajsim/errors.hpp"

namespace trajsim {

void ImpedanceParams::validate() const {
  if (!(r0_km > 0.0) || std::isnan(r0_km) || std::isinf(r0_km)) {
    throw ConfigError("impedance.r0_km must be > 0");
  }
  if (!(beta >= 0.0) || std::isinf(beta)) {
    throw ConfigError("impedance.beta must be >= 0");
  }
  if (!(k_km > 0.0)) throw ConfigError("impedance.k_km must be > 0 or \"inf\"");
}

DeterrenceMode parse_deterrence_mode(std::string_view text) {
  if (text == "multiply") return DeterrenceMode::Multiply;
  if (text == "divide") return DeterrenceMode::Divide;
  throw ConfigError("impedance.mode must be 'multiply' or 'divide', got '" +
                    std::string(text) + "'");
}

std::string_view to_string(DeterrenceMode mode) {
  return mode == DeterrenceMode::Multiply ? "multiply" : "divide";
}

double impedance(double distance_km, const ImpedanceParams& params) {
  // exp(-d / inf) is exactly 1 and pow(x, -0.0) is exactly 1.
  return std::pow(distance_km + params.r0_km, -params.beta) *
         std::exp(-distance_km / params.k_km);
}

double spatial_weight(const Poi& poi, const GeoPoint& current,
                      const ImpedanceParams& params, DeterrenceMode mode) {
  const double f = impedance(haversine(current, poi.location), params);
  return mode == DeterrenceMode::Multiply ? poi.attraction * f
                                          : poi.attraction / f;
}

}  // namespace trajsim
