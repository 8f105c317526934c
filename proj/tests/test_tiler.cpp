#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "terracast/pipeline.hpp"
#include "terracast/tiler.hpp"

using namespace terracast;

namespace {

// Independent enumerator: every lattice origin j*k/n + i*k that keeps the tile inside the AOI.
std::vector<std::tuple<int, double, double>> brute_tiles(double W, double H, double k, int n) {
  std::vector<std::tuple<int, double, double>> out;
  for (int j = 0; j < n; ++j) {
    const double o = j * k / n;
    for (int b = 0; b < 100; ++b)
      for (int a = 0; a < 100; ++a) {
        const double x = o + a * k, y = o + b * k;
        if (x + k <= W + 1e-9 && y + k <= H + 1e-9) out.emplace_back(j, x, y);
      }
  }
  return out;
}

std::shared_ptr<GrayRasterSource> gradient_source(std::uint32_t w, std::uint32_t h, double kpp) {
  Raster r(w, h, 1);
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x) r.at(x, y) = static_cast<float>((x + y) % 17) / 16.0f;
  return std::make_shared<GrayRasterSource>(std::move(r), kpp);
}

std::vector<ProjectedEvent> random_events(std::size_t n, double W, double H, std::span<const TimePeriod> periods,
                                          std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> ux(0, W), uy(0, H);
  std::vector<ProjectedEvent> ev;
  for (std::size_t i = 0; i < n; ++i) ev.push_back({{ux(g), uy(g)}, periods[g() % periods.size()]});
  return ev;
}

}  // namespace

TEST(GridPasses, SinglePassPartition) {
  const auto p = grid_passes(12, 12, 4, 1);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].tiles.size(), 9u);
  // Lattice order: south row first, west to east.
  EXPECT_DOUBLE_EQ(p[0].tiles[1].origin.x, 4.0);
  EXPECT_DOUBLE_EQ(p[0].tiles[1].origin.y, 0.0);
  EXPECT_DOUBLE_EQ(p[0].tiles[3].origin.y, 4.0);
}

TEST(GridPasses, MatchesBruteForceEnumerator) {
  const auto passes = grid_passes(12, 12, 4, 5);
  const auto brute = brute_tiles(12, 12, 4, 5);
  std::size_t n = 0;
  for (std::size_t j = 0; j < passes.size(); ++j) {
    EXPECT_NEAR(passes[j].offset.x, 0.8 * j, 1e-12);
    for (const auto& t : passes[j].tiles) {
      const auto hit = std::find_if(brute.begin(), brute.end(), [&](const auto& b) {
        return std::get<0>(b) == int(j) && std::abs(std::get<1>(b) - t.origin.x) < 1e-9 &&
               std::abs(std::get<2>(b) - t.origin.y) < 1e-9;
      });
      EXPECT_NE(hit, brute.end());
      ++n;
    }
  }
  EXPECT_EQ(n, brute.size());
  EXPECT_EQ(n, 9u + 4 * 4u);
}

TEST(GridPasses, DisjointWithinPassAndInteriorMultiplicity) {
  const auto passes = grid_passes(12, 12, 4, 5);
  for (const auto& p : passes)
    for (std::size_t a = 0; a < p.tiles.size(); ++a)
      for (std::size_t b = a + 1; b < p.tiles.size(); ++b) {
        const auto &s = p.tiles[a], &t = p.tiles[b];
        const bool overlap = s.origin.x < t.origin.x + t.width && t.origin.x < s.origin.x + s.width &&
                             s.origin.y < t.origin.y + t.height && t.origin.y < s.origin.y + s.height;
        EXPECT_FALSE(overlap);
      }
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(4.0, 8.0);
  for (int i = 0; i < 500; ++i) {
    const PlanarPoint q{u(g), u(g)};
    int mult = 0;
    for (const auto& p : passes)
      for (const auto& t : p.tiles) mult += t.contains(q);
    EXPECT_EQ(mult, 5);
  }
}

TEST(GridPasses, Errors) {
  EXPECT_THROW(grid_passes(12, 12, 13), std::invalid_argument);
  EXPECT_THROW(grid_passes(12, 12, 4, 0), std::invalid_argument);
}

TEST(Sat0, ZeroEventsAllClassZero) {
  const auto src = gradient_source(120, 120, 0.1);
  const auto periods = years_span(2014, 2014);
  const std::vector<ProjectedEvent> none;
  const auto d = build_sat0(*src, none, 4, periods, IntensityScheme::three_class(), 16);
  EXPECT_EQ(d.records.size(), 25u * 12u);
  EXPECT_EQ(d.nonzero(), 0u);
  EXPECT_EQ(d.tile_count(), 25u);
  for (const auto& r : d.records) {
    EXPECT_EQ(r.raster->width(), 16u);
    EXPECT_EQ(r.raster->height(), 16u);
  }
}

TEST(Sat0, PerPassCountConservation) {
  const auto src = gradient_source(120, 120, 0.1);
  const auto periods = years_span(2015, 2015);
  const auto ev = random_events(1000, 12, 12, periods, 5);
  const auto d = build_sat0(*src, ev, 4, periods, IntensityScheme::five_class(), 8);
  const auto passes = grid_passes(12, 12, 4, 5);
  for (int j = 0; j < 5; ++j)
    for (const auto& t : periods) {
      std::int64_t sum = 0, covered = 0;
      for (const auto& r : d.records)
        if (r.pass == j && r.period == t) {
          sum += r.count;
          EXPECT_EQ(r.label, IntensityScheme::five_class().bucket(r.count));
        }
      const double lo = passes[static_cast<std::size_t>(j)].offset.x;
      const double hi = lo + (j == 0 ? 12.0 : 8.0);
      for (const auto& e : ev)
        covered += e.period == t && e.pos.x >= lo && e.pos.x < hi && e.pos.y >= lo && e.pos.y < hi;
      EXPECT_EQ(sum, covered);
    }
}

TEST(Sat1, FilterKeepsOnlyActiveTilesAndPreservesCounts) {
  const auto src = gradient_source(120, 120, 0.1);
  const auto periods = years_span(2014, 2015);
  // Events only in the south-west 4 km and in one month.
  const std::vector<ProjectedEvent> ev{{{1.0, 1.0}, {3, 2014}}, {{2.0, 3.5}, {3, 2014}}, {{0.5, 0.5}, {8, 2015}}};
  const auto sat0 = build_sat0(*src, ev, 4, periods, IntensityScheme::three_class(), 8);
  const auto sat1 = filter_sat1(sat0, ev);
  EXPECT_EQ(sat1.name, "SAT1(4)");
  // The first tile of passes 0, 1 (origin 0.8) and 2 (origin 1.6, holds (2,3.5)).
  EXPECT_EQ(sat1.tile_count(), 3u);
  EXPECT_EQ(sat1.records.size(), 3u * periods.size());
  std::int64_t c0 = 0, c1 = 0;
  for (const auto& r : sat0.records) c0 += r.count;
  for (const auto& r : sat1.records) c1 += r.count;
  EXPECT_EQ(c0, c1);
  EXPECT_EQ(sat0.nonzero(), sat1.nonzero());
}

TEST(OffsetTestset, ZeroOffsetEqualsPassZero) {
  const auto src = gradient_source(120, 120, 0.1);
  const auto periods = years_span(2016, 2016);
  const auto ev = random_events(200, 12, 12, periods, 8);
  const auto sat0 = build_sat0(*src, ev, 4, periods, IntensityScheme::three_class(), 8);
  const auto o = offset_testset(*src, ev, 4, 0.0, periods, IntensityScheme::three_class(), 8);
  std::vector<TileRecord> pass0;
  for (const auto& r : sat0.records)
    if (r.pass == 0) pass0.push_back(r);
  ASSERT_EQ(o.records.size(), pass0.size());
  for (std::size_t i = 0; i < pass0.size(); ++i) {
    EXPECT_EQ(o.records[i].count, pass0[i].count);
    EXPECT_EQ(*o.records[i].raster, *pass0[i].raster);
  }
  const auto o1 = offset_testset(*src, ev, 4, 1.11, periods, IntensityScheme::three_class(), 8);
  EXPECT_NEAR(o1.records.front().region.origin.x, 1.11, 1e-12);
}

TEST(Encode, TemporalChannelEndpoints) {
  TileRecord r;
  auto img = std::make_shared<Raster>(4, 4, 1);
  for (auto& v : img->data()) v = 0.3f;
  r.raster = img;
  const TemporalNorm norm{2014, 2017};
  r.period = {1, 2014};
  auto e = encode_input(r, norm);
  ASSERT_EQ(e.image.size(), 48u);
  for (std::size_t i = 16; i < 48; ++i) EXPECT_EQ(e.image[i], 0.0f);
  r.period = {12, 2017};
  e = encode_input(r, norm);
  for (std::size_t i = 16; i < 48; ++i) EXPECT_EQ(e.image[i], 1.0f);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_FLOAT_EQ(e.image[i], 0.3f);
  const auto mh = encode_input_multihead(r, norm);
  EXPECT_EQ(mh.image.size(), 16u);
  EXPECT_EQ(mh.scalars[0], 1.0f);
  r.period = {1, 2018};
  EXPECT_THROW(encode_input(r, norm), std::invalid_argument);
}

TEST(Encode, GrayscaleChannelInUnitRange) {
  const auto src = gradient_source(120, 120, 0.1);
  const auto periods = years_span(2014, 2014);
  const std::vector<ProjectedEvent> none;
  const auto d = build_sat0(*src, none, 4, periods, IntensityScheme::two_class(), 16, 2);
  for (const auto& r : d.records) {
    const auto e = encode_input(r, {});
    for (std::size_t i = 0; i < 256; ++i) {
      EXPECT_GE(e.image[i], 0.0f);
      EXPECT_LE(e.image[i], 1.0f);
    }
  }
}

TEST(DatasetIo, RoundTrip) {
  const auto src = gradient_source(120, 120, 0.1);
  const auto periods = years_span(2014, 2014);
  const auto ev = random_events(100, 12, 12, periods, 2);
  const auto d = filter_sat1(build_sat0(*src, ev, 4, periods, IntensityScheme::three_class(), 8), ev);
  const auto dir = std::filesystem::temp_directory_path() / "terracast_dataset_io";
  std::filesystem::remove_all(dir);
  save_dataset(d, dir);
  const auto back = load_dataset(dir);
  EXPECT_EQ(back.name, d.name);
  EXPECT_EQ(back.k, d.k);
  EXPECT_EQ(back.res, d.res);
  ASSERT_EQ(back.records.size(), d.records.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    EXPECT_EQ(back.records[i].count, d.records[i].count);
    EXPECT_EQ(back.records[i].label, d.records[i].label);
    EXPECT_EQ(back.records[i].period, d.records[i].period);
    EXPECT_EQ(back.records[i].tile, d.records[i].tile);
    EXPECT_DOUBLE_EQ(back.records[i].region.origin.x, d.records[i].region.origin.x);
    EXPECT_EQ(*back.records[i].raster, *d.records[i].raster);
  }
  std::filesystem::remove_all(dir);
}

TEST(Sat0, SparsityOnPaperAoi) {
  PlantConfig pc;
  pc.last_year = 2016;
  const auto plant = make_plant(pc);
  const auto periods = years_span(2014, 2016);
  const auto d = build_sat0(*plant.source, plant.projected, 10, periods, IntensityScheme::three_class(), 8);
  EXPECT_LT(d.nonzero_fraction(), 0.15);
  EXPECT_GT(d.nonzero_fraction(), 0.0);
  const auto s1 = filter_sat1(d, plant.projected);
  EXPECT_GT(s1.nonzero_fraction(), d.nonzero_fraction());
}
