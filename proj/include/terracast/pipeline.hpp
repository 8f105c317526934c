#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "terracast/events.hpp"
#include "terracast/learn/baselines.hpp"
#include "terracast/learn/train.hpp"
#include "terracast/node2vec.hpp"
#include "terracast/regions.hpp"
#include "terracast/synthgen.hpp"
#include "terracast/tiler.hpp"

namespace terracast {

inline constexpr GeoPoint kDefaultOrigin{20.0, 79.0, {}};

// Identity of a (tile, period) record, independent of dataset ordering.
inline std::uint64_t record_key(const TileRecord& r) {
  const double parts[3] = {r.region.width, r.region.origin.x, r.region.origin.y};
  std::uint64_t h = fnv1a64(std::as_bytes(std::span(parts)));
  const int t = r.period.index();
  return fnv1a64(std::as_bytes(std::span(&t, 1)), h);
}

inline learn::Example to_example(const TileRecord& r, const TemporalNorm& norm) {
  return {r.raster, temporal_features(r.period, norm), r.label.class_index, record_key(r)};
}

inline std::vector<learn::Example> to_examples(const TileDataset& d, const TemporalNorm& norm) {
  std::vector<learn::Example> out;
  out.reserve(d.records.size());
  for (const auto& r : d.records) out.push_back(to_example(r, norm));
  return out;
}

// Relabels a dataset under another scheme (counts are kept, so this is exact).
inline TileDataset relabel(const TileDataset& d, const IntensityScheme& scheme) {
  TileDataset out = d;
  out.scheme = scheme;
  for (auto& r : out.records) r.label = scheme.bucket(r.count);
  return out;
}

inline std::vector<int> labels_of(std::span<const learn::Example> ex) {
  std::vector<int> y;
  for (const auto& e : ex) y.push_back(e.label);
  return y;
}

// A complete synthetic world: landscape, planted risk, events, and the tile imagery source.
struct Plant {
  GeoPoint origin = kDefaultOrigin;
  LandscapeRaster landscape;
  RiskSurface surface;
  std::vector<ConflictEvent> events;
  std::vector<ProjectedEvent> projected;
  std::shared_ptr<GrayRasterSource> source;

  GeoBox bounds() const {
    const GeoPoint sw = unproject({0, 0}, origin);
    const GeoPoint ne = unproject({landscape.width_km(), landscape.height_km()}, origin);
    return {sw.lat, sw.lon, ne.lat, ne.lon};
  }
};

struct PlantConfig {
  std::uint64_t seed = 0;
  std::uint32_t width_px = 1320;
  std::uint32_t height_px = 1210;
  double km_per_px = 0.1;
  double rate = 0.38;  // events per month per 100 km^2
  int first_year = 2014;
  int last_year = 2017;
  GeoPoint origin = kDefaultOrigin;
};

inline Plant make_plant(const PlantConfig& cfg) {
  Plant p;
  p.origin = cfg.origin;
  p.landscape = gen_landscape(cfg.seed, cfg.width_px, cfg.height_px, cfg.km_per_px);
  p.surface = risk_surface(p.landscape, cfg.rate);
  const auto months = years_span(cfg.first_year, cfg.last_year);
  p.events = gen_events(p.surface, months, cfg.seed, p.origin, p.landscape.settlement_centers);
  // Attach terrain elevation so 3-D clustering has something to use.
  for (auto& e : p.events) {
    const PlanarPoint q = project(e.location, p.origin);
    const auto x = std::min<std::uint32_t>(p.landscape.width_px - 1, static_cast<std::uint32_t>(q.x / cfg.km_per_px));
    const auto y = std::min<std::uint32_t>(p.landscape.height_px - 1, static_cast<std::uint32_t>(q.y / cfg.km_per_px));
    e.location.elev = p.landscape.channels.at(x, y, kElevation);
  }
  p.projected = project_events(p.events, p.origin);
  p.source = std::make_shared<GrayRasterSource>(grayscale(p.landscape), cfg.km_per_px);
  return p;
}

inline std::vector<ProjectedEvent> events_in_years(std::span<const ProjectedEvent> ev, const std::set<int>& years) {
  std::vector<ProjectedEvent> out;
  for (const auto& e : ev)
    if (years.count(e.period.year)) out.push_back(e);
  return out;
}

// SAT1(k) restricted to `periods`, with the zero-history filter applied over `history`.
inline TileDataset build_sat1(const RasterSource& src, std::span<const ProjectedEvent> events, double k,
                              std::span<const TimePeriod> periods, const IntensityScheme& scheme, std::uint32_t res,
                              std::span<const ProjectedEvent> history, int n_offsets = 5) {
  return filter_sat1(build_sat0(src, events, k, periods, scheme, res, n_offsets), history);
}

// NWA features for the region-identifier baselines: region representation + (month, year).
enum class RegionFeatures { one_hot, embedding };

inline learn::Matrix nwa_features(std::span<const NwaRow> rows, std::size_t k, RegionFeatures kind,
                                  const EmbeddingTable* emb, const TemporalNorm& norm) {
  const std::size_t width = kind == RegionFeatures::one_hot ? k : emb->dims;
  learn::Matrix X = learn::Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width + 2));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto id = static_cast<std::size_t>(rows[i].region_id);
    if (kind == RegionFeatures::one_hot)
      X(r, static_cast<Eigen::Index>(id)) = 1.0;
    else
      for (std::size_t j = 0; j < width; ++j) X(r, static_cast<Eigen::Index>(j)) = emb->vectors[id][j];
    const auto tf = temporal_features(rows[i].period, norm);
    X(r, static_cast<Eigen::Index>(width)) = tf[0];
    X(r, static_cast<Eigen::Index>(width + 1)) = tf[1];
  }
  return X;
}

}  // namespace terracast
