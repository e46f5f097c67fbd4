#pragma once

#include <algorithm>
#include <cmath>

namespace bikeflow {

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

struct BoundingBox {
  double min_lat = 0.0;
  double min_lon = 0.0;
  double max_lat = 0.0;
  double max_lon = 0.0;

  bool contains(LatLon p) const {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon &&
           p.lon <= max_lon;
  }
};

constexpr double kEarthRadiusMeters = 6371008.8;

// Great-circle distance in meters.
inline double haversine(LatLon a, LatLon b) {
  constexpr double deg = M_PI / 180.0;
  double phi1 = a.lat * deg;
  double phi2 = b.lat * deg;
  double dphi = (b.lat - a.lat) * deg;
  double dlam = (b.lon - a.lon) * deg;
  double s = std::sin(dphi / 2);
  double t = std::sin(dlam / 2);
  double h = s * s + std::cos(phi1) * std::cos(phi2) * t * t;
  return 2.0 * kEarthRadiusMeters * std::asin(std::min(1.0, std::sqrt(h)));
}

}  // namespace bikeflow
