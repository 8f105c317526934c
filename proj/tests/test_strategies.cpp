#include <gtest/gtest.h>

#include <random>

#include "terracast/strategies.hpp"

using namespace terracast;

namespace {

std::shared_ptr<GrayRasterSource> stripes(std::uint32_t w, std::uint32_t h) {
  Raster r(w, h, 1);
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x) r.at(x, y) = static_cast<float>((x / 7 + y / 5) % 2);
  return std::make_shared<GrayRasterSource>(std::move(r), 0.1);
}

std::vector<ProjectedEvent> scatter(std::size_t n, double side, std::span<const TimePeriod> periods,
                                    std::uint64_t seed) {
  std::mt19937_64 g(seed);
  // Events cluster in the west half so labels depend on position.
  std::uniform_real_distribution<double> ux(0, side / 2), uy(0, side);
  std::vector<ProjectedEvent> ev;
  for (std::size_t i = 0; i < n; ++i) ev.push_back({{ux(g), uy(g)}, periods[g() % periods.size()]});
  return ev;
}

// All weights zero; the final bias makes `cls` the arg-max for every input.
learn::Network<float> constant_net(const learn::NetworkSpec& spec, int cls) {
  learn::Network<float> n(spec);
  std::vector<double> p(n.param_count(), 0.0);
  p[p.size() - spec.n_classes + static_cast<std::size_t>(cls)] = 5.0;
  n.set_flat_params(p);
  return n;
}

TileRecord record(std::size_t tile, int cls, std::uint32_t res = 16) {
  TileRecord r;
  r.tile = tile;
  r.region = {{4.0 * static_cast<double>(tile), 0}, 4, 4};
  r.raster = std::make_shared<Raster>(res, res, 1);
  r.period = {1, 2014};
  r.label = {cls};
  r.count = cls;
  return r;
}

learn::TrainConfig tiny(int epochs) {
  learn::TrainConfig c;
  c.adam.lr = 1e-3;
  c.epochs = epochs;
  c.batch_size = 16;
  c.samples_per_epoch = 64;
  return c;
}

}  // namespace

TEST(Scheduler, NeverAdvancesOnIncreasingCurve) {
  CurriculumScheduler s(5);
  for (int e = 0; e < 100; ++e) EXPECT_FALSE(s.observe(0.001 * e));
}

TEST(Scheduler, FlatCurveAdvancesAfterPatiencePlusOne) {
  for (int patience : {1, 3, 5}) {
    CurriculumScheduler s(patience);
    int epoch = 0;
    bool fired = false;
    while (!fired) fired = s.observe(0.5), ++epoch;
    EXPECT_EQ(epoch, patience + 1);
    s.reset();
    EXPECT_FALSE(s.observe(0.1));
  }
}

TEST(Scheduler, ImprovementResetsCounter) {
  CurriculumScheduler s(2);
  EXPECT_FALSE(s.observe(0.5));
  EXPECT_FALSE(s.observe(0.4));
  EXPECT_FALSE(s.observe(0.6));
  EXPECT_FALSE(s.observe(0.6));
  EXPECT_TRUE(s.observe(0.6));
}

TEST(CurriculumPlan, Validation) {
  TileDataset a, b;
  a.k = 10;
  b.k = 4;
  CurriculumPlan p{{a, b}, 5, 300, {}};
  EXPECT_NO_THROW(p.validate());
  p.patience = 300;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.patience = 5;
  p.stages = {b, a};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.stages = {a, b};
  p.stages[1].res = 32;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.stages.clear();
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Curriculum, StagesAccumulateIntoPool) {
  const auto src = stripes(160, 160);
  const auto periods = years_span(2014, 2014);
  const auto ev = scatter(400, 16, periods, 1);
  const auto two = IntensityScheme::two_class();
  const auto s8 = build_sat1(*src, ev, 8, periods, two, 16, ev);
  const auto s4 = build_sat1(*src, ev, 4, periods, two, 16, ev);
  CurriculumPlan plan{{s8, s4}, 1, 6, {2014, 2014}};
  const auto r = curriculum_train<float>(learn::cnn_spec("N5", 16), plan, tiny(6));
  EXPECT_EQ(r.trace.size(), 6u);
  ASSERT_LE(r.transitions.size(), 1u);
  if (!r.transitions.empty()) {
    EXPECT_EQ(r.transitions[0].stage, 1u);
    EXPECT_EQ(r.transitions[0].pool_size, s8.records.size() + s4.records.size());
    EXPECT_GE(r.transitions[0].epoch, 2);
  }
  const auto again = curriculum_train<float>(learn::cnn_spec("N5", 16), plan, tiny(6));
  EXPECT_EQ(again.network.checksum(), r.network.checksum());
}

TEST(Fcl, UnweightedMean) {
  MetricsReport a, b;
  a.accuracy = 1.0;
  b.accuracy = 0.5;
  a.macro_recall = 0.2;
  b.macro_recall = 0.4;
  const auto f = fcl_average({a, b});
  EXPECT_DOUBLE_EQ(f.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(f.recall, 0.3);
  EXPECT_EQ(fcl_average({}).accuracy, 0.0);
}

TEST(Hierarchy, EmptyGatedSubsetThrows) {
  std::vector<HierRecord> rows{{record(0, 1), record(0, 0)}, {record(1, 0), record(0, 0)}};
  TileDataset sat10;
  sat10.k = 10;
  sat10.res = 16;
  sat10.records = {record(0, 0), record(1, 1)};
  EXPECT_THROW(hier_train<float>(learn::cnn_spec("N2", 16), learn::cnn_spec("N5", 16), sat10, rows, tiny(1), tiny(1)),
               std::runtime_error);
}

TEST(Hierarchy, GatedSubsetIsSubsetAndOrderInvariant) {
  std::vector<HierRecord> rows;
  for (std::size_t i = 0; i < 12; ++i) rows.push_back({record(i, int(i % 2)), record(i / 4, int(i / 4 == 1))});
  const auto sub = gated_subset(rows);
  EXPECT_EQ(sub.size(), 4u);
  for (const auto& r : sub) EXPECT_TRUE(r.tile >= 4 && r.tile < 8);
  auto rev = rows;
  std::reverse(rev.begin(), rev.end());
  auto sub2 = gated_subset(rev);
  std::reverse(sub2.begin(), sub2.end());
  ASSERT_EQ(sub2.size(), sub.size());
  for (std::size_t i = 0; i < sub.size(); ++i) EXPECT_EQ(sub[i].tile, sub2[i].tile);
}

TEST(Hierarchy, GateSemantics) {
  HierarchyModel<float> m;
  m.micro = constant_net(learn::cnn_spec("N5", 16), 1);
  std::vector<HierRecord> rows;
  for (std::size_t i = 0; i < 6; ++i) rows.push_back({record(i, 1), record(i / 3, 1)});

  m.macro = constant_net(learn::cnn_spec("N2", 16), 0);
  for (int p : hier_predict_all(m, rows)) EXPECT_EQ(p, 0);
  EXPECT_EQ(hier_predict(m, rows[0]).class_index, 0);

  m.macro = constant_net(learn::cnn_spec("N2", 16), 2);
  for (int p : hier_predict_all(m, rows)) EXPECT_EQ(p, 1);
  EXPECT_EQ(hier_predict(m, rows[0]).class_index, 1);
  const auto rep = hm_metrics(m, rows, IntensityScheme::two_class());
  EXPECT_DOUBLE_EQ(rep.composed.accuracy, 1.0);
  EXPECT_EQ(rep.micro_gated.total, 6u);
}

TEST(Hierarchy, ParentContainsCentre) {
  const auto src = stripes(250, 230);
  const auto periods = years_span(2014, 2014);
  const auto ev = scatter(300, 23, periods, 2);
  const auto s4 = build_sat1(*src, ev, 4, periods, IntensityScheme::two_class(), 8, ev);
  const auto rows = assign_parents(s4, *src, ev, 10, IntensityScheme::three_class());
  ASSERT_EQ(rows.size(), s4.records.size());
  for (const auto& h : rows) {
    const auto c = h.micro.region.center();
    EXPECT_EQ(h.parent.pass, 0);
    EXPECT_EQ(h.parent.period, h.micro.period);
    // Centres in the uncovered margin (x >= 20 or y >= 20) map to the last full tile.
    const PlanarPoint clamped{std::min(c.x, 19.999), std::min(c.y, 19.999)};
    EXPECT_TRUE(h.parent.region.contains(clamped));
    EXPECT_EQ(h.parent.count, count_in_region(std::span<const ProjectedEvent>(ev), h.parent.region, h.parent.period));
  }
}
