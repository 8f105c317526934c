#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "terracast/events.hpp"
#include "terracast/geo.hpp"
#include "terracast/intensity.hpp"

using namespace terracast;

namespace {

const GeoPoint kOrigin{20.0, 79.0, {}};

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  const double r = 6371.0088, d2r = kPi / 180.0;
  const double dlat = (b.lat - a.lat) * d2r, dlon = (b.lon - a.lon) * d2r;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * d2r) * std::cos(b.lat * d2r) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2 * r * std::asin(std::sqrt(h));
}

ConflictEvent event_at(double lat, double lon, TimePeriod t) {
  ConflictEvent e;
  e.location = {lat, lon, {}};
  e.period = t;
  return e;
}

}  // namespace

TEST(Projection, OriginMapsToZero) {
  const auto p = project(kOrigin, kOrigin);
  EXPECT_EQ(p.x, 0.0);
  EXPECT_EQ(p.y, 0.0);
}

TEST(Projection, OneDegreeNorth) {
  const auto p = project({21.0, 79.0, {}}, kOrigin);
  EXPECT_NEAR(p.x, 0.0, 1e-12);
  EXPECT_NEAR(p.y, 110.574, 1e-9);
}

TEST(Projection, OneDegreeEastAgreesWithHaversine) {
  const GeoPoint east{20.0, 80.0, {}};
  const auto p = project(east, kOrigin);
  EXPECT_NEAR(p.x, 104.61, 0.01);
  EXPECT_NEAR(p.y, 0.0, 1e-12);
  EXPECT_LT(std::abs(p.x - haversine_km(kOrigin, east)) / haversine_km(kOrigin, east), 0.005);
}

TEST(Projection, RoundTripWithinAoi) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(0.0, 1.2);
  for (int i = 0; i < 1000; ++i) {
    const GeoPoint p{kOrigin.lat + u(g), kOrigin.lon + u(g), {}};
    const auto q = project(p, kOrigin);
    const auto back = project(unproject(q, kOrigin), kOrigin);
    EXPECT_LT(std::hypot(back.x - q.x, back.y - q.y), 1e-9);
  }
}

TEST(Projection, RejectsNonFinite) {
  EXPECT_THROW(project({NAN, 79.0, {}}, kOrigin), std::invalid_argument);
  EXPECT_THROW(unproject({INFINITY, 0.0}, kOrigin), std::invalid_argument);
}

TEST(TimePeriodTest, ValidatesMonthAndOrders) {
  EXPECT_THROW(TimePeriod(0, 2015), std::invalid_argument);
  EXPECT_THROW(TimePeriod(13, 2015), std::invalid_argument);
  EXPECT_LT(TimePeriod(12, 2014), TimePeriod(1, 2015));
  EXPECT_EQ(TimePeriod(2, 2015).str(), "2015-02");
  EXPECT_EQ(years_span(2014, 2016).size(), 36u);
  EXPECT_EQ(TimePeriod::from_index(TimePeriod(7, 2016).index()), TimePeriod(7, 2016));
}

TEST(RegionRectTest, RejectsDegenerateSize) {
  EXPECT_THROW(RegionRect({0, 0}, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(RegionRect({0, 0}, 1.0, -1.0), std::invalid_argument);
}

TEST(Bucket, PaperRanges) {
  const auto three = IntensityScheme::three_class(), five = IntensityScheme::five_class();
  EXPECT_EQ(bucket(0, three).class_index, 0);
  EXPECT_EQ(bucket(5, three).class_index, 1);
  EXPECT_EQ(bucket(9, three).class_index, 1);
  EXPECT_EQ(bucket(10, three).class_index, 2);
  EXPECT_EQ(bucket(12, five).class_index, 4);
  EXPECT_EQ(bucket(3, five).class_index, 1);
  EXPECT_EQ(bucket(6, five).class_index, 2);  // the doubly covered count goes to the lower range
  EXPECT_EQ(bucket(7, five).class_index, 3);
  EXPECT_EQ(bucket(0, IntensityScheme::two_class()).class_index, 0);
  EXPECT_EQ(bucket(1, IntensityScheme::two_class()).class_index, 1);
  EXPECT_EQ(bucket(1000, IntensityScheme::two_class()).class_index, 1);
}

TEST(Bucket, TotalAndMonotone) {
  for (int n : {2, 3, 5}) {
    const auto s = IntensityScheme::with_classes(n);
    EXPECT_EQ(s.class_count(), n);
    EXPECT_EQ(s.bucket(0).class_index, 0);
    int prev = 0;
    for (std::int64_t c = 0; c < 200; ++c) {
      const int k = s.bucket(c).class_index;
      EXPECT_GE(k, prev);
      EXPECT_LT(k, n);
      prev = k;
    }
  }
}

TEST(Bucket, SchemeValidation) {
  EXPECT_THROW(IntensityScheme({1, 3}), std::invalid_argument);
  EXPECT_THROW(IntensityScheme({0, 2}), std::invalid_argument);  // first range must be exactly [0]
  EXPECT_THROW(IntensityScheme({0, 4, 4}), std::invalid_argument);
  EXPECT_THROW(IntensityScheme::with_classes(4), std::invalid_argument);
  EXPECT_THROW(IntensityScheme::three_class().bucket(-1), std::invalid_argument);
  EXPECT_EQ(IntensityScheme::five_class().range_name(2), "[4-6]");
  EXPECT_EQ(IntensityScheme::five_class().range_name(4), "[10+]");
  EXPECT_EQ(IntensityScheme::five_class().range_name(0), "[0]");
}

TEST(CountInRegion, EmptyListIsZero) {
  const std::vector<ConflictEvent> none;
  EXPECT_EQ(count_in_region(std::span<const ConflictEvent>(none), RegionRect({0, 0}, 4, 4), {1, 2015}, kOrigin), 0);
}

TEST(CountInRegion, HalfOpenCorners) {
  const RegionRect r({0, 0}, 4, 4);
  const TimePeriod t(3, 2015);
  const GeoPoint sw = unproject({0, 0}, kOrigin);
  std::vector<ConflictEvent> ev{event_at(sw.lat, sw.lon, t)};
  EXPECT_EQ(count_in_region(std::span<const ConflictEvent>(ev), r, t, kOrigin), 1);
  // North-east corner of the rect, constructed in the planar frame.
  const std::vector<ProjectedEvent> ne{{{4.0, 4.0}, t}};
  EXPECT_EQ(count_in_region(std::span<const ProjectedEvent>(ne), r, t), 0);
  // Other periods are not counted.
  EXPECT_EQ(count_in_region(std::span<const ConflictEvent>(ev), r, {4, 2015}, kOrigin), 0);
}

TEST(CountInRegion, TilingConservesTotal) {
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> u(0.0, 12.0);
  const TimePeriod t(5, 2016);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ProjectedEvent> ev;
    for (int i = 0; i < 7; ++i) ev.push_back({{u(g), u(g)}, t});
    std::int64_t total = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const RegionRect r({4.0 * i, 4.0 * j}, 4, 4);
        const auto c = count_in_region(std::span<const ProjectedEvent>(ev), r, t);
        std::int64_t brute = 0;
        for (const auto& e : ev)
          brute += e.pos.x >= 4.0 * i && e.pos.x < 4.0 * i + 4 && e.pos.y >= 4.0 * j && e.pos.y < 4.0 * j + 4;
        EXPECT_EQ(c, brute);
        total += c;
      }
    EXPECT_EQ(total, 7);
  }
}

TEST(Events, UnknownAnimalIsOther) {
  EXPECT_EQ(parse_animal("tiger"), Animal::tiger);
  EXPECT_EQ(parse_animal("sloth bear"), Animal::other);
  EXPECT_EQ(to_string(Animal::boar), "boar");
}
