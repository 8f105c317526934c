#pragma once

#include <cmath>
#include <cstdio>
#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace terracast {

inline constexpr double kKmPerDegLat = 110.574;
inline constexpr double kKmPerDegLonEquator = 111.320;
inline constexpr double kPi = 3.14159265358979323846;

struct GeoPoint {
  double lat = 0.0;  // degrees, WGS84
  double lon = 0.0;
  std::optional<double> elev;  // meters

  bool valid() const {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
           lon >= -180.0 && lon <= 180.0 && (!elev || std::isfinite(*elev));
  }
};

// Kilometres east/north of an AOI origin.
struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;
};

struct TimePeriod {
  int month = 1;  // 1..12
  int year = 2014;

  TimePeriod() = default;
  TimePeriod(int month_, int year_) : month(month_), year(year_) {
    if (month < 1 || month > 12) throw std::invalid_argument("TimePeriod: month out of [1,12]");
  }

  // Months since year 0; handy for ordering and spans.
  int index() const { return year * 12 + (month - 1); }
  static TimePeriod from_index(int idx) { return {idx % 12 + 1, idx / 12}; }

  friend bool operator==(const TimePeriod&, const TimePeriod&) = default;
  friend auto operator<=>(const TimePeriod& a, const TimePeriod& b) { return a.index() <=> b.index(); }

  std::string str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
  }
};

// Inclusive month range [first, last].
inline std::vector<TimePeriod> month_span(TimePeriod first, TimePeriod last) {
  std::vector<TimePeriod> out;
  for (int i = first.index(); i <= last.index(); ++i) out.push_back(TimePeriod::from_index(i));
  return out;
}

inline std::vector<TimePeriod> years_span(int first_year, int last_year) {
  return month_span({1, first_year}, {12, last_year});
}

// Local equirectangular projection. Valid for AOIs spanning a few degrees.
inline PlanarPoint project(const GeoPoint& p, const GeoPoint& origin) {
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || !std::isfinite(origin.lat) ||
      !std::isfinite(origin.lon))
    throw std::invalid_argument("project: non-finite coordinate");
  const double coslat = std::cos(origin.lat * kPi / 180.0);
  return {(p.lon - origin.lon) * kKmPerDegLonEquator * coslat, (p.lat - origin.lat) * kKmPerDegLat};
}

inline GeoPoint unproject(const PlanarPoint& q, const GeoPoint& origin) {
  if (!std::isfinite(q.x) || !std::isfinite(q.y))
    throw std::invalid_argument("unproject: non-finite coordinate");
  const double coslat = std::cos(origin.lat * kPi / 180.0);
  return {origin.lat + q.y / kKmPerDegLat, origin.lon + q.x / (kKmPerDegLonEquator * coslat), {}};
}

// Axis-aligned m km x n km region, origin at the south-west corner.
struct RegionRect {
  PlanarPoint origin;
  double width = 0.0;
  double height = 0.0;

  RegionRect() = default;
  RegionRect(PlanarPoint o, double w, double h) : origin(o), width(w), height(h) {
    if (!(w > 0.0) || !(h > 0.0)) throw std::invalid_argument("RegionRect: non-positive size");
  }

  // Half-open membership [x, x+w) x [y, y+h).
  bool contains(const PlanarPoint& p) const {
    return p.x >= origin.x && p.x < origin.x + width && p.y >= origin.y && p.y < origin.y + height;
  }
  PlanarPoint center() const { return {origin.x + width / 2, origin.y + height / 2}; }
};

struct GeoBox {
  double lat0 = 0, lon0 = 0, lat1 = 0, lon1 = 0;  // south-west, north-east

  bool contains(const GeoPoint& p) const {
    return p.lat >= lat0 && p.lat <= lat1 && p.lon >= lon0 && p.lon <= lon1;
  }
};

}  // namespace terracast
