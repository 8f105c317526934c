#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "terracast/events.hpp"
#include "terracast/ingest.hpp"
#include "terracast/intensity.hpp"
#include "terracast/raster.hpp"

namespace terracast {

inline constexpr double kTileEps = 1e-9;

// Where tile imagery comes from. The synthetic landscape is the default implementation; a
// basemap fetcher would implement the same two calls.
class RasterSource {
 public:
  virtual ~RasterSource() = default;
  virtual double width_km() const = 0;
  virtual double height_km() const = 0;
  // Single-channel crop of `region`, resampled to res x res, values in [0,1].
  virtual Raster crop(const RegionRect& region, std::uint32_t res) const = 0;
};

class GrayRasterSource final : public RasterSource {
 public:
  GrayRasterSource(Raster gray, double km_per_px) : gray_(std::move(gray)), km_per_px_(km_per_px) {
    if (gray_.channels() != 1) throw std::invalid_argument("GrayRasterSource: expected 1 channel");
  }
  double width_km() const override { return gray_.width() * km_per_px_; }
  double height_km() const override { return gray_.height() * km_per_px_; }
  double km_per_px() const { return km_per_px_; }
  const Raster& raster() const { return gray_; }

  Raster crop(const RegionRect& r, std::uint32_t res) const override {
    const double x0 = std::max(0.0, r.origin.x / km_per_px_), y0 = std::max(0.0, r.origin.y / km_per_px_);
    const double x1 = std::min<double>(gray_.width(), (r.origin.x + r.width) / km_per_px_);
    const double y1 = std::min<double>(gray_.height(), (r.origin.y + r.height) / km_per_px_);
    return resample_area(gray_, 0, x0, y0, x1, y1, res, res);
  }

 private:
  Raster gray_;
  double km_per_px_;
};

struct GridPass {
  double tile_size_km = 0;
  PlanarPoint offset;
  std::vector<RegionRect> tiles;  // lattice order: rows south to north, west to east within a row
};

inline GridPass grid_pass_at(double W, double H, double k, double dx, double dy) {
  GridPass p;
  p.tile_size_km = k;
  p.offset = {dx, dy};
  for (int j = 0; dy + (j + 1) * k <= H + kTileEps; ++j)
    for (int i = 0; dx + (i + 1) * k <= W + kTileEps; ++i)
      p.tiles.emplace_back(PlanarPoint{dx + i * k, dy + j * k}, k, k);
  return p;
}

// Pass j is shifted by j*k/n_offsets along both axes; tiles leaving the AOI are dropped.
inline std::vector<GridPass> grid_passes(double W, double H, double k, int n_offsets = 5) {
  if (!(k > 0) || k > std::min(W, H) + kTileEps) throw std::invalid_argument("grid_passes: tile larger than AOI");
  if (n_offsets < 1) throw std::invalid_argument("grid_passes: n_offsets must be >= 1");
  std::vector<GridPass> out;
  for (int j = 0; j < n_offsets; ++j) {
    const double o = j * k / n_offsets;
    out.push_back(grid_pass_at(W, H, k, o, o));
  }
  return out;
}

struct TileRecord {
  RegionRect region;
  int pass = 0;
  std::size_t tile = 0;  // index into the dataset's tile list
  std::shared_ptr<const Raster> raster;
  TimePeriod period;
  std::int64_t count = 0;
  IntensityLabel label;
};

struct TileDataset {
  std::string name;
  double k = 0;
  std::uint32_t res = 64;
  IntensityScheme scheme = IntensityScheme::three_class();
  std::vector<TileRecord> records;

  std::size_t nonzero() const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(),
                                                  [](const TileRecord& r) { return r.label.class_index > 0; }));
  }
  double nonzero_fraction() const { return records.empty() ? 0.0 : double(nonzero()) / records.size(); }
  std::size_t tile_count() const {
    std::size_t n = 0;
    for (const auto& r : records) n = std::max(n, r.tile + 1);
    return n;
  }
};

namespace detail {

inline std::string fmt_k(double k) {
  std::ostringstream os;
  os << k;
  return os.str();
}

// Records for a list of passes: tile-major, then period.
inline std::vector<TileRecord> tile_records(const RasterSource& src, std::span<const GridPass> passes,
                                            std::span<const ProjectedEvent> events,
                                            std::span<const TimePeriod> periods, const IntensityScheme& scheme,
                                            std::uint32_t res, int first_pass_index = 0) {
  std::map<int, std::vector<ProjectedEvent>> by_period;
  for (const auto& e : events) by_period[e.period.index()].push_back(e);
  std::vector<TileRecord> out;
  std::size_t tile_id = 0;
  for (std::size_t p = 0; p < passes.size(); ++p)
    for (const auto& rect : passes[p].tiles) {
      auto img = std::make_shared<const Raster>(src.crop(rect, res));
      for (const auto& t : periods) {
        TileRecord r;
        r.region = rect;
        r.pass = first_pass_index + static_cast<int>(p);
        r.tile = tile_id;
        r.raster = img;
        r.period = t;
        auto it = by_period.find(t.index());
        r.count = it == by_period.end() ? 0 : count_in_region(std::span<const ProjectedEvent>(it->second), rect, t);
        r.label = scheme.bucket(r.count);
        out.push_back(std::move(r));
      }
      ++tile_id;
    }
  return out;
}

}  // namespace detail

// SAT0(k): every (tile, period) over n_offsets overlapping passes.
inline TileDataset build_sat0(const RasterSource& src, std::span<const ProjectedEvent> events, double k,
                              std::span<const TimePeriod> periods, const IntensityScheme& scheme,
                              std::uint32_t res, int n_offsets = 5) {
  const auto passes = grid_passes(src.width_km(), src.height_km(), k, n_offsets);
  TileDataset d;
  d.name = "SAT0(" + detail::fmt_k(k) + ")";
  d.k = k;
  d.res = res;
  d.scheme = scheme;
  d.records = detail::tile_records(src, passes, events, periods, scheme, res);
  return d;
}

// SAT1(k): drop every tile with no event anywhere in `history` (all years, not just the dataset's).
inline TileDataset filter_sat1(const TileDataset& sat0, std::span<const ProjectedEvent> history) {
  TileDataset d = sat0;
  d.name = "SAT1(" + detail::fmt_k(sat0.k) + ")";
  d.records.clear();
  std::map<std::size_t, bool> active;
  for (const auto& r : sat0.records) {
    auto [it, fresh] = active.try_emplace(r.tile, false);
    if (fresh)
      it->second = std::any_of(history.begin(), history.end(),
                               [&](const ProjectedEvent& e) { return r.region.contains(e.pos); });
    if (it->second) d.records.push_back(r);
  }
  // Renumber tiles densely, keeping order.
  std::map<std::size_t, std::size_t> remap;
  for (auto& r : d.records) {
    auto [it, _] = remap.try_emplace(r.tile, remap.size());
    r.tile = it->second;
  }
  return d;
}

// Single pass shifted by (offset, offset); used for spatial robustness test sets.
inline TileDataset offset_testset(const RasterSource& src, std::span<const ProjectedEvent> events, double k,
                                  double offset_km, std::span<const TimePeriod> periods,
                                  const IntensityScheme& scheme, std::uint32_t res) {
  const GridPass pass = grid_pass_at(src.width_km(), src.height_km(), k, offset_km, offset_km);
  TileDataset d;
  d.name = "O(" + detail::fmt_k(k) + "," + detail::fmt_k(offset_km) + ")";
  d.k = k;
  d.res = res;
  d.scheme = scheme;
  d.records = detail::tile_records(src, std::span(&pass, 1), events, periods, scheme, res);
  return d;
}

inline TileDataset restrict_periods(const TileDataset& d, std::span<const TimePeriod> keep) {
  TileDataset out = d;
  out.records.clear();
  for (const auto& r : d.records)
    if (std::find(keep.begin(), keep.end(), r.period) != keep.end()) out.records.push_back(r);
  return out;
}

struct TemporalNorm {
  int year_min = 2014;
  int year_max = 2017;
};

// Model input. `image` is channel-major (C x res x res).
struct EncodedInput {
  std::uint32_t channels = 0;
  std::uint32_t res = 0;
  std::vector<float> image;
  std::array<float, 2> scalars{};  // normalized (month, year)
};

inline std::array<float, 2> temporal_features(const TimePeriod& t, const TemporalNorm& norm) {
  if (t.year < norm.year_min || t.year > norm.year_max)
    throw std::invalid_argument("encode_input: year " + std::to_string(t.year) + " outside normalization range");
  const float m = static_cast<float>(t.month - 1) / 11.0f;
  const float y = norm.year_max == norm.year_min
                      ? 0.0f
                      : static_cast<float>(t.year - norm.year_min) / static_cast<float>(norm.year_max - norm.year_min);
  return {m, y};
}

// 3-channel encoding: grayscale, then constant month and year planes.
inline EncodedInput encode_input(const TileRecord& r, const TemporalNorm& norm) {
  const auto tf = temporal_features(r.period, norm);
  const Raster& g = *r.raster;
  const std::size_t plane = static_cast<std::size_t>(g.width()) * g.height();
  EncodedInput e;
  e.channels = 3;
  e.res = g.width();
  e.image.resize(3 * plane);
  for (std::size_t i = 0; i < plane; ++i) e.image[i] = std::clamp(g.data()[i], 0.0f, 1.0f);
  std::fill(e.image.begin() + static_cast<std::ptrdiff_t>(plane), e.image.begin() + static_cast<std::ptrdiff_t>(2 * plane), tf[0]);
  std::fill(e.image.begin() + static_cast<std::ptrdiff_t>(2 * plane), e.image.end(), tf[1]);
  e.scalars = tf;
  return e;
}

// Multi-head encoding: the raster alone, with (month, year) carried as scalars.
inline EncodedInput encode_input_multihead(const TileRecord& r, const TemporalNorm& norm) {
  const Raster& g = *r.raster;
  EncodedInput e;
  e.channels = 1;
  e.res = g.width();
  e.image.resize(g.data().size());
  for (std::size_t i = 0; i < e.image.size(); ++i) e.image[i] = std::clamp(g.data()[i], 0.0f, 1.0f);
  e.scalars = temporal_features(r.period, norm);
  return e;
}

// Directory layout: dataset.csv (one line of metadata), manifest.csv, tiles/tile_NNNNN.tcr.
// Records of one tile share its raster file.
inline void save_dataset(const TileDataset& d, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "tiles");
  {
    std::ofstream meta(dir / "dataset.csv");
    meta << "name,k_km,res,classes\n" << d.name << ',' << detail::fmt_k(d.k) << ',' << d.res << ','
         << d.scheme.class_count() << '\n';
  }
  std::ofstream man(dir / "manifest.csv");
  man << "tile,pass,x_km,y_km,size_km,year,month,count,label,raster\n";
  std::map<std::size_t, bool> written;
  char buf[256];
  for (const auto& r : d.records) {
    char name[32];
    std::snprintf(name, sizeof name, "tiles/tile_%05zu.tcr", r.tile);
    if (!written[r.tile]) {
      write_tcr((dir / name).string(), *r.raster);
      written[r.tile] = true;
    }
    std::snprintf(buf, sizeof buf, "%zu,%d,%.9g,%.9g,%.9g,%d,%d,%lld,%d,%s\n", r.tile, r.pass, r.region.origin.x,
                  r.region.origin.y, r.region.width, r.period.year, r.period.month,
                  static_cast<long long>(r.count), r.label.class_index, name);
    man << buf;
  }
}

inline TileDataset load_dataset(const std::filesystem::path& dir) {
  TileDataset d;
  std::ifstream meta(dir / "dataset.csv");
  if (!meta) throw std::runtime_error("dataset: missing " + (dir / "dataset.csv").string());
  std::string line;
  std::getline(meta, line);
  std::getline(meta, line);
  auto f = csv::split_line(line);
  if (f.size() != 4) throw std::runtime_error("dataset: bad dataset.csv");
  d.name = f[0];
  d.k = std::stod(f[1]);
  d.res = static_cast<std::uint32_t>(std::stoul(f[2]));
  d.scheme = IntensityScheme::with_classes(std::stoi(f[3]));
  std::ifstream man(dir / "manifest.csv");
  if (!man) throw std::runtime_error("dataset: missing manifest.csv");
  std::getline(man, line);
  std::map<std::string, std::shared_ptr<const Raster>> cache;
  while (std::getline(man, line)) {
    if (line.empty()) continue;
    f = csv::split_line(line);
    if (f.size() != 10) throw std::runtime_error("dataset: bad manifest row");
    TileRecord r;
    r.tile = std::stoul(f[0]);
    r.pass = std::stoi(f[1]);
    const double s = std::stod(f[4]);
    r.region = RegionRect({std::stod(f[2]), std::stod(f[3])}, s, s);
    r.period = TimePeriod(std::stoi(f[6]), std::stoi(f[5]));
    r.count = std::stoll(f[7]);
    r.label = {std::stoi(f[8])};
    auto& img = cache[f[9]];
    if (!img) img = std::make_shared<const Raster>(read_tcr((dir / f[9]).string()));
    r.raster = img;
    d.records.push_back(std::move(r));
  }
  return d;
}

}  // namespace terracast
