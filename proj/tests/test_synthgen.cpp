#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "terracast/raster.hpp"
#include "terracast/synthgen.hpp"

using namespace terracast;

namespace {

const GeoPoint kOrigin{20.0, 79.0, {}};

// The full-size AOI is expensive, so it is built once.
const LandscapeRaster& full_aoi() {
  static const LandscapeRaster L = gen_landscape(0, 1320, 1210, 0.1);
  return L;
}
const RiskSurface& full_risk() {
  static const RiskSurface S = risk_surface(full_aoi(), 0.38);
  return S;
}

}  // namespace

TEST(Landscape, Deterministic) {
  const auto a = gen_landscape(11, 96, 80, 0.1), b = gen_landscape(11, 96, 80, 0.1);
  EXPECT_EQ(a.channels, b.channels);
  EXPECT_EQ(a.settlement_centers.size(), b.settlement_centers.size());
}

TEST(Landscape, SeedsDiffer) {
  const auto a = gen_landscape(1, 128, 128, 0.1), b = gen_landscape(2, 128, 128, 0.1);
  std::size_t diff = 0;
  for (std::uint32_t y = 0; y < 128; ++y)
    for (std::uint32_t x = 0; x < 128; ++x) diff += a.channels.at(x, y, kForest) != b.channels.at(x, y, kForest);
  EXPECT_GE(diff, 128u * 128u / 100u);
}

TEST(Landscape, RejectsTinyDimensions) {
  EXPECT_THROW(gen_landscape(0, 31, 64, 0.1), std::invalid_argument);
  EXPECT_THROW(gen_landscape(0, 64, 64, 0.0), std::invalid_argument);
}

TEST(Landscape, ChannelRangesAndBimodalForest) {
  const auto& L = full_aoi();
  std::size_t low = 0, high = 0, water = 0;
  const std::size_t n = static_cast<std::size_t>(L.width_px) * L.height_px;
  for (std::uint32_t y = 0; y < L.height_px; ++y)
    for (std::uint32_t x = 0; x < L.width_px; ++x) {
      for (std::uint32_t c = 0; c < 4; ++c) ASSERT_TRUE(std::isfinite(L.channels.at(x, y, c)));
      for (std::uint32_t c = 1; c < 4; ++c) {
        ASSERT_GE(L.channels.at(x, y, c), 0.0f);
        ASSERT_LE(L.channels.at(x, y, c), 1.0f);
      }
      const float f = L.channels.at(x, y, kForest);
      low += f < 0.2f;
      high += f > 0.8f;
      water += L.channels.at(x, y, kWater) > 0.5f;
    }
  EXPECT_GE(low, n / 5);
  EXPECT_GE(high, n / 5);
  EXPECT_GT(water, 0u);
  EXPECT_FALSE(L.settlement_centers.empty());
}

TEST(Landscape, GrayscaleBlend) {
  const auto L = gen_landscape(4, 64, 64, 0.1);
  const auto g = grayscale(L);
  ASSERT_EQ(g.channels(), 1u);
  float emin = 1e30f, emax = -1e30f;
  for (std::uint32_t y = 0; y < 64; ++y)
    for (std::uint32_t x = 0; x < 64; ++x) {
      emin = std::min(emin, L.channels.at(x, y, kElevation));
      emax = std::max(emax, L.channels.at(x, y, kElevation));
    }
  for (std::uint32_t y = 0; y < 64; y += 7)
    for (std::uint32_t x = 0; x < 64; x += 5) {
      const double e = (L.channels.at(x, y, kElevation) - emin) / (emax - emin);
      const double want = 0.5 * L.channels.at(x, y, kForest) + 0.2 * (1 - L.channels.at(x, y, kSettlement)) +
                          0.2 * L.channels.at(x, y, kWater) + 0.1 * e;
      EXPECT_NEAR(g.at(x, y), want, 1e-5);
    }
}

TEST(Risk, ZeroRateIsZeroSurface) {
  const auto L = gen_landscape(5, 64, 64, 0.1);
  const auto S = risk_surface(L, 0.0);
  for (float v : S.risk.data()) EXPECT_EQ(v, 0.0f);
  const auto months = years_span(2014, 2014);
  EXPECT_TRUE(gen_events(S, months, 5, kOrigin).empty());
  EXPECT_THROW(risk_surface(L, -1.0), std::invalid_argument);
}

TEST(Risk, PaperAoiNormalization) {
  const auto& S = full_risk();
  // 0.38 events / month / 100 km^2 over 132 x 121 km.
  EXPECT_NEAR(S.total(), 0.38 * 132.0 * 121.0 / 100.0, 0.01);
  EXPECT_NEAR(S.total(), 60.7, 0.05);
  double mean = 0;
  for (double m : S.seasonal) mean += m / 12.0;
  EXPECT_NEAR(mean, 1.0, 1e-12);
  for (float v : S.risk.data()) ASSERT_GE(v, 0.0f);
}

TEST(Risk, MassConcentratedInBoundaryBand) {
  const auto& S = full_risk();
  double in_band = 0, total = 0;
  for (std::size_t i = 0; i < S.band.size(); ++i) {
    total += S.risk.data()[i];
    if (S.band[i]) in_band += S.risk.data()[i];
  }
  EXPECT_GE(in_band / total, 0.70);
}

TEST(Events, PoissonCalibrationOverThreeYears) {
  const auto& S = full_risk();
  const auto months = years_span(2014, 2016);
  const auto ev = gen_events(S, months, 0, kOrigin);
  double expected = 0;
  for (const auto& t : months) expected += S.expected_in_month(t.month);
  EXPECT_NEAR(expected, 36 * 0.38 * 132 * 121 / 100.0, 0.5);
  EXPECT_LE(std::abs(static_cast<double>(ev.size()) - expected), 3 * std::sqrt(expected));
}

TEST(Events, SupportAndDeterminism) {
  const auto L = gen_landscape(9, 200, 160, 0.1);
  const auto S = risk_surface(L, 0.38);
  const auto months = years_span(2014, 2015);
  const auto a = gen_events(S, months, 9, kOrigin, L.settlement_centers);
  const auto b = gen_events(S, months, 9, kOrigin, L.settlement_centers);
  ASSERT_EQ(a.size(), b.size());
  ASSERT_FALSE(a.empty());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].location.lat, b[i].location.lat);
    EXPECT_EQ(a[i].location.lon, b[i].location.lon);
    const auto p = project(a[i].location, kOrigin);
    const auto px = static_cast<std::uint32_t>(std::floor(p.x / S.km_per_px + 1e-9));
    const auto py = static_cast<std::uint32_t>(std::floor(p.y / S.km_per_px + 1e-9));
    ASSERT_LT(px, S.width_px);
    ASSERT_LT(py, S.height_px);
    // Jitter stays inside the sampled pixel; allow the neighbouring pixel for round-off at edges.
    float r = S.risk.at(px, py);
    if (r <= 0) {
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const auto qx = static_cast<std::int64_t>(px) + dx, qy = static_cast<std::int64_t>(py) + dy;
          if (qx >= 0 && qy >= 0 && qx < S.width_px && qy < S.height_px)
            r = std::max(r, S.risk.at(static_cast<std::uint32_t>(qx), static_cast<std::uint32_t>(qy)));
        }
    }
    EXPECT_GT(r, 0.0f);
  }
}

TEST(Tcr, RoundTripAndChecksum) {
  Raster r(5, 3, 2);
  for (std::size_t i = 0; i < r.data().size(); ++i) r.data()[i] = static_cast<float>(i) * 0.25f - 1.0f;
  std::stringstream ss;
  write_tcr(ss, r);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.size(), 4 + 12 + 5 * 3 * 2 * 4 + 8u);
  EXPECT_EQ(bytes.substr(0, 4), "TCR1");
  std::istringstream in(bytes);
  EXPECT_EQ(read_tcr(in), r);

  std::string bad = bytes;
  bad[20] ^= 0x01;
  std::istringstream in2(bad);
  EXPECT_THROW(read_tcr(in2), std::runtime_error);
  std::istringstream in3(bytes.substr(0, 10));
  EXPECT_THROW(read_tcr(in3), std::runtime_error);
}

TEST(Tcr, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a64(std::string_view("")), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64(std::string_view("a")), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64(std::string_view("foobar")), 0x85944171f73967e8ull);
}

TEST(Resample, PreservesMean) {
  Raster r(100, 80, 1);
  std::mt19937_64 g(1);
  for (auto& v : r.data()) v = static_cast<float>(rng::uniform01(g));
  double mean = 0;
  for (float v : r.data()) mean += v;
  mean /= static_cast<double>(r.data().size());
  for (std::uint32_t res : {7u, 32u, 64u, 224u}) {
    const auto o = resample_area(r, 0, 0, 0, 100, 80, res, res);
    double m = 0;
    for (float v : o.data()) m += v;
    m /= static_cast<double>(o.data().size());
    EXPECT_NEAR(m, mean, 0.01 * mean);
  }
  EXPECT_THROW(resample_area(r, 0, 0, 0, 101, 80, 4, 4), std::invalid_argument);
}

TEST(Resample, ExactBoxAverage) {
  Raster r(4, 4, 1);
  for (std::uint32_t y = 0; y < 4; ++y)
    for (std::uint32_t x = 0; x < 4; ++x) r.at(x, y) = static_cast<float>(x + 4 * y);
  const auto o = resample_area(r, 0, 0, 0, 4, 4, 2, 2);
  EXPECT_FLOAT_EQ(o.at(0, 0), (0 + 1 + 4 + 5) / 4.0f);
  EXPECT_FLOAT_EQ(o.at(1, 1), (10 + 11 + 14 + 15) / 4.0f);
  const auto half = resample_area(r, 0, 0.5, 0, 1.5, 1, 1, 1);
  EXPECT_FLOAT_EQ(half.at(0, 0), 0.5f);
}
