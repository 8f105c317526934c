#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "terracast/learn/train.hpp"
#include "terracast/metrics.hpp"
#include "terracast/pipeline.hpp"
#include "terracast/strategies.hpp"
#include "terracast/tiler.hpp"

namespace terracast {

// Hex FNV-1a of the compact JSON dump; ordered_json keeps key order, so equal configs hash equally.
inline std::string config_hash(const nlohmann::ordered_json& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(cfg.dump())));
  return buf;
}

struct OffsetSpec {
  std::string name;
  double offset_km = 0;
  std::set<int> years;  // periods evaluated
};

// O1/O2/O3: two unseen offsets over all years, and the larger one on the test year only.
inline std::vector<OffsetSpec> default_offsets(const std::set<int>& all_years, int test_year,
                                               double o1 = 1.11, double o2 = 2.77) {
  return {{"O1", o1, all_years}, {"O2", o2, all_years}, {"O3", o2, {test_year}}};
}

// True when `offset` coincides (mod k) with one of the training passes j*k/n_offsets.
inline bool is_training_offset(double offset, double k, int n_offsets) {
  const double step = k / n_offsets;
  const double r = std::fmod(offset, k) / step;
  return std::abs(r - std::round(r)) * step < 1e-6;
}

struct RobustnessRow {
  OffsetSpec spec;
  MetricsReport report;
  double delta = 0;  // report.accuracy - baseline accuracy
  bool warned = false;
};

struct RobustnessReport {
  MetricsReport baseline;
  std::vector<RobustnessRow> rows;
  std::vector<std::string> warnings;
};

// Offset test sets get the same zero-history filter as the training data (SAT1 semantics).
template <class T>
RobustnessReport robustness_eval(const learn::Network<T>& net, const RasterSource& src,
                                 std::span<const ProjectedEvent> events, const TileDataset& trained_offset_test,
                                 std::span<const OffsetSpec> offsets, int n_training_offsets,
                                 const TemporalNorm& norm = {}) {
  RobustnessReport rep;
  rep.baseline = evaluate_dataset(net, trained_offset_test, norm);
  const double k = trained_offset_test.k;
  for (const auto& o : offsets) {
    RobustnessRow row;
    row.spec = o;
    if (is_training_offset(o.offset_km, k, n_training_offsets)) {
      row.warned = true;
      rep.warnings.push_back(o.name + ": offset " + detail::fmt_k(o.offset_km) +
                             " km coincides with a training pass; evaluating anyway");
    }
    std::vector<TimePeriod> periods;
    for (int y : o.years)
      for (int m = 1; m <= 12; ++m) periods.emplace_back(m, y);
    auto d = filter_sat1(offset_testset(src, events, k, o.offset_km, periods, trained_offset_test.scheme,
                                        trained_offset_test.res),
                         events);
    d.name = o.name;
    row.report = evaluate_dataset(net, d, norm);
    row.delta = row.report.accuracy - rep.baseline.accuracy;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

inline std::string robustness_table(const RobustnessReport& r) {
  std::vector<std::string> cols;
  std::vector<MetricsReport> reps;
  for (const auto& row : r.rows) {
    cols.push_back(row.spec.name);
    reps.push_back(row.report);
  }
  std::string out = metrics_table("Robustness to unseen offsets", cols, reps);
  out += "Trained-offset test accuracy " + pct(r.baseline.accuracy) + "\n";
  for (const auto& row : r.rows)
    out += row.spec.name + " delta " + fixed2(100.0 * row.delta) + " points\n";
  for (const auto& w : r.warnings) out += "warning: " + w + "\n";
  return out;
}

struct MapCell {
  RegionRect rect;
  int label = 0;
  double score = 0;  // probability of the predicted class
  double k_km = 0;
  TimePeriod period;
};

inline nlohmann::ordered_json emit_map(std::span<const MapCell> cells, const GeoPoint& origin) {
  nlohmann::ordered_json fc;
  fc["type"] = "FeatureCollection";
  fc["features"] = nlohmann::ordered_json::array();
  for (const auto& c : cells) {
    const double x0 = c.rect.origin.x, y0 = c.rect.origin.y;
    const double x1 = x0 + c.rect.width, y1 = y0 + c.rect.height;
    nlohmann::ordered_json ring = nlohmann::ordered_json::array();
    // Counter-clockwise exterior ring, closed.
    for (auto [x, y] : {std::pair{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}) {
      const GeoPoint g = unproject({x, y}, origin);
      ring.push_back({g.lon, g.lat});
    }
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    f["geometry"] = {{"type", "Polygon"}, {"coordinates", nlohmann::ordered_json::array({ring})}};
    f["properties"] = {{"class", c.label}, {"score", c.score}, {"k_km", c.k_km}, {"period", c.period.str()}};
    fc["features"].push_back(std::move(f));
  }
  return fc;
}

// Pass-0 prediction map for one period.
template <class T>
std::vector<MapCell> predict_map(const learn::Network<T>& net, const RasterSource& src, double k, std::uint32_t res,
                                 const TimePeriod& period, const TemporalNorm& norm = {}) {
  const GridPass pass = grid_pass_at(src.width_km(), src.height_km(), k, 0.0, 0.0);
  learn::Network<T> local = net;
  std::vector<MapCell> out;
  std::vector<T> in(local.spec().input_shape.size());
  for (const auto& rect : pass.tiles) {
    learn::Example ex{std::make_shared<const Raster>(src.crop(rect, res)), temporal_features(period, norm), 0, 0};
    learn::build_input<T>(ex, local.spec(), in);
    const std::vector<T> sc(ex.scalars.begin(), ex.scalars.end());
    const auto z = local.forward(in, sc);
    const auto best = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    double s = 0;
    for (T v : z) s += std::exp(static_cast<double>(v - z[best]));
    out.push_back({rect, static_cast<int>(best), 1.0 / s, k, period});
  }
  return out;
}

// Appends one JSON object per line.
inline void append_jsonl(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump() << '\n';
}

}  // namespace terracast
