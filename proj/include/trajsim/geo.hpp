#pragma once

namespace trajsim {

inline constexpr double kEarthRadiusKm = 6371.0;

// WGS84-style coordinate in degrees. Construction rejects out-of-range values.
class GeoPoint {
 public:
  GeoPoint() = default;
  GeoPoint(double lat, double lon);

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

// Great-circle distance on a sphere of radius kEarthRadiusKm.
double haversine(const GeoPoint& a, const GeoPoint& b) noexcept;

}  // namespace trajsim
