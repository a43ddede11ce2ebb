#include "trajsim/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace trajsim {

GeoPoint::GeoPoint(double lat, double lon) : lat_(lat), lon_(lon) {
  // NaN fails both comparisons, so it is rejected as well.
  if (!(lat >= -90.0 && lat <= 90.0)) {
    throw std::out_of_range("latitude out of range: " + std::to_string(lat));
  }
  if (!(lon >= -180.0 && lon <= 180.0)) {
    throw std::out_of_range("longitude out of range: " + std::to_string(lon));
  }
}

double haversine(const GeoPoint& a, const GeoPoint& b) noexcept {
  constexpr double kRad = std::numbers::pi / 180.0;
  const double phi1 = a.lat() * kRad;
  const double phi2 = b.lat() * kRad;
  const double sin_dphi = std::sin((phi2 - phi1) / 2.0);
  const double sin_dlambda = std::sin((b.lon() - a.lon()) * kRad / 2.0);
  const double h = sin_dphi * sin_dphi +
                   std::cos(phi1) * std::cos(phi2) * sin_dlambda * sin_dlambda;
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

}  // namespace trajsim
