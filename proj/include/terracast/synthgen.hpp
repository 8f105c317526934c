#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "terracast/events.hpp"
#include "terracast/raster.hpp"

namespace terracast {

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

// Uniform [0,1) from 53 high bits; independent of the standard library's distributions.
template <class Gen>
double uniform01(Gen& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

}  // namespace rng

// Channel order inside LandscapeRaster::channels.
enum LandscapeChannel : std::uint32_t { kElevation = 0, kForest = 1, kWater = 2, kSettlement = 3 };

struct LandscapeConfig {
  double elevation_scale_km = 24.0;
  double forest_scale_km = 7.0;
  double forest_cover = 0.55;          // fraction of land above the forest threshold
  double km2_per_settlement = 500.0;   // one settlement cluster per this much area
  double water_half_width_km = 0.15;
};

struct LandscapeRaster {
  std::uint32_t width_px = 0, height_px = 0;
  double km_per_px = 0.1;
  std::uint64_t seed = 0;
  Raster channels;  // 4 channels: elevation (m), forest, water, settlement
  std::vector<PlanarPoint> settlement_centers;

  double width_km() const { return width_px * km_per_px; }
  double height_km() const { return height_px * km_per_px; }
  double area_km2() const { return width_km() * height_km(); }
};

namespace detail {

// Bilinear value noise with smoothstep easing over a lattice of `cell` pixels.
inline double value_noise(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  auto lattice = [&](std::int64_t i, std::int64_t j) {
    const std::uint64_t h = rng::mix(seed, rng::mix(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  };
  auto ease = [](double t) { return t * t * (3 - 2 * t); };
  const double tx = ease(x - fx), ty = ease(y - fy);
  const double a = lattice(ix, iy), b = lattice(ix + 1, iy), c = lattice(ix, iy + 1), d = lattice(ix + 1, iy + 1);
  return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

// Four-octave fractal noise in [0,1].
inline std::vector<double> fbm_field(std::uint64_t seed, std::uint32_t w, std::uint32_t h, double cell_px) {
  std::vector<double> f(static_cast<std::size_t>(w) * h, 0.0);
  double amp = 1.0, total = 0.0, cell = cell_px;
  for (int oct = 0; oct < 4; ++oct) {
    const std::uint64_t s = rng::mix(seed, 1000 + oct);
    for (std::uint32_t y = 0; y < h; ++y)
      for (std::uint32_t x = 0; x < w; ++x)
        f[static_cast<std::size_t>(y) * w + x] += amp * value_noise(s, x / cell, y / cell);
    total += amp;
    amp *= 0.5;
    cell = std::max(2.0, cell / 2);
  }
  for (auto& v : f) v /= total;
  return f;
}

}  // namespace detail

inline LandscapeRaster gen_landscape(std::uint64_t seed, std::uint32_t width_px, std::uint32_t height_px,
                                     double km_per_px, const LandscapeConfig& cfg = {}) {
  if (width_px < 32 || height_px < 32) throw std::invalid_argument("gen_landscape: dimensions below 32x32");
  if (!(km_per_px > 0)) throw std::invalid_argument("gen_landscape: km_per_px must be positive");
  LandscapeRaster L;
  L.width_px = width_px;
  L.height_px = height_px;
  L.km_per_px = km_per_px;
  L.seed = seed;
  L.channels = Raster(width_px, height_px, 4);
  const std::size_t n = static_cast<std::size_t>(width_px) * height_px;
  auto idx = [&](std::uint32_t x, std::uint32_t y) { return static_cast<std::size_t>(y) * width_px + x; };

  const auto elev = detail::fbm_field(rng::mix(seed, 1), width_px, height_px, cfg.elevation_scale_km / km_per_px);
  const auto fnoise = detail::fbm_field(rng::mix(seed, 2), width_px, height_px, cfg.forest_scale_km / km_per_px);

  // Forest: steep sigmoid around the (1 - cover) quantile gives a bimodal density.
  std::vector<double> sorted(fnoise);
  const auto q = static_cast<std::size_t>(std::clamp(1.0 - cfg.forest_cover, 0.0, 1.0) * (n - 1));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(q), sorted.end());
  const double thr = sorted[q];
  std::vector<double> forest(n);
  for (std::size_t i = 0; i < n; ++i) forest[i] = 1.0 / (1.0 + std::exp(-(fnoise[i] - thr) * 60.0));

  // Water course: steepest descent from the highest pixel, never revisiting, until the border.
  std::vector<std::uint8_t> course(n, 0);
  {
    // Source: highest pixel of the central region, so the course spans a good part of the AOI.
    std::int64_t x = width_px / 2, y = height_px / 2;
    double top = -1.0;
    for (std::uint32_t py = height_px / 4; py < 3 * height_px / 4; ++py)
      for (std::uint32_t px = width_px / 4; px < 3 * width_px / 4; ++px)
        if (elev[idx(px, py)] > top) top = elev[idx(px, py)], x = px, y = py;
    for (std::size_t step = 0; step < n; ++step) {
      course[idx(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y))] = 1;
      if (x == 0 || y == 0 || x == width_px - 1 || y == height_px - 1) break;
      double best = 1e300;
      std::int64_t bx = -1, by = -1;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy) continue;
          const auto nx = x + dx, ny = y + dy;
          const auto k = idx(static_cast<std::uint32_t>(nx), static_cast<std::uint32_t>(ny));
          if (course[k]) continue;
          if (elev[k] < best) best = elev[k], bx = nx, by = ny;
        }
      if (bx < 0) break;
      x = bx;
      y = by;
    }
  }
  const int wr = std::max(1, static_cast<int>(std::lround(cfg.water_half_width_km / km_per_px)));
  std::vector<double> water(n, 0.0);
  for (std::uint32_t y = 0; y < height_px; ++y)
    for (std::uint32_t x = 0; x < width_px; ++x) {
      if (!course[idx(x, y)]) continue;
      for (int dy = -wr; dy <= wr; ++dy)
        for (int dx = -wr; dx <= wr; ++dx) {
          const auto nx = static_cast<std::int64_t>(x) + dx, ny = static_cast<std::int64_t>(y) + dy;
          if (nx < 0 || ny < 0 || nx >= width_px || ny >= height_px || dx * dx + dy * dy > wr * wr) continue;
          water[idx(static_cast<std::uint32_t>(nx), static_cast<std::uint32_t>(ny))] = 1.0;
        }
    }

  // Settlements: disc clusters seeded preferentially where forest is sparse.
  std::mt19937_64 gen(rng::mix(seed, 3));
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double open = water[i] > 0.5 ? 0.0 : std::pow(1.0 - forest[i], 3.0);
    acc += open;
    cdf[i] = acc;
  }
  std::vector<double> settle(n, 0.0);
  const auto clusters = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(L.area_km2() / cfg.km2_per_settlement)));
  for (std::size_t c = 0; c < clusters && acc > 0; ++c) {
    const double u = rng::uniform01(gen) * acc;
    const auto pick = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    const double cx = static_cast<double>(std::min(pick, n - 1) % width_px) + 0.5;
    const double cy = static_cast<double>(std::min(pick, n - 1) / width_px) + 0.5;
    L.settlement_centers.push_back({cx * km_per_px, cy * km_per_px});
    const int discs = 1 + static_cast<int>(gen() % 4);
    for (int d = 0; d < discs; ++d) {
      const double ang = 2 * kPi * rng::uniform01(gen);
      const double off = (d == 0 ? 0.0 : 1.5 * rng::uniform01(gen)) / km_per_px;
      const double r = (0.3 + 0.6 * rng::uniform01(gen)) / km_per_px;
      const double dx0 = cx + off * std::cos(ang), dy0 = cy + off * std::sin(ang);
      const auto x0 = static_cast<std::int64_t>(std::floor(dx0 - r)), x1 = static_cast<std::int64_t>(std::ceil(dx0 + r));
      const auto y0 = static_cast<std::int64_t>(std::floor(dy0 - r)), y1 = static_cast<std::int64_t>(std::ceil(dy0 + r));
      for (auto py = std::max<std::int64_t>(y0, 0); py <= std::min<std::int64_t>(y1, height_px - 1); ++py)
        for (auto px = std::max<std::int64_t>(x0, 0); px <= std::min<std::int64_t>(x1, width_px - 1); ++px) {
          const double ex = px + 0.5 - dx0, ey = py + 0.5 - dy0;
          const auto k = idx(static_cast<std::uint32_t>(px), static_cast<std::uint32_t>(py));
          if (ex * ex + ey * ey <= r * r && water[k] < 0.5) settle[k] = 1.0;
        }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto x = static_cast<std::uint32_t>(i % width_px), y = static_cast<std::uint32_t>(i / width_px);
    const double f = (water[i] > 0.5 || settle[i] > 0.5) ? 0.0 : forest[i];
    L.channels.at(x, y, kElevation) = static_cast<float>(150.0 + 600.0 * elev[i]);
    L.channels.at(x, y, kForest) = static_cast<float>(f);
    L.channels.at(x, y, kWater) = static_cast<float>(water[i]);
    L.channels.at(x, y, kSettlement) = static_cast<float>(settle[i]);
  }
  return L;
}

// Single-channel model input: 0.5 forest + 0.2 (1 - settlement) + 0.2 water + 0.1 normalized elevation.
inline Raster grayscale(const LandscapeRaster& L) {
  Raster g(L.width_px, L.height_px, 1);
  float emin = 1e30f, emax = -1e30f;
  for (std::uint32_t y = 0; y < L.height_px; ++y)
    for (std::uint32_t x = 0; x < L.width_px; ++x) {
      emin = std::min(emin, L.channels.at(x, y, kElevation));
      emax = std::max(emax, L.channels.at(x, y, kElevation));
    }
  const float span = emax > emin ? emax - emin : 1.0f;
  for (std::uint32_t y = 0; y < L.height_px; ++y)
    for (std::uint32_t x = 0; x < L.width_px; ++x) {
      const float e = (L.channels.at(x, y, kElevation) - emin) / span;
      const float v = 0.5f * L.channels.at(x, y, kForest) + 0.2f * (1.0f - L.channels.at(x, y, kSettlement)) +
                      0.2f * L.channels.at(x, y, kWater) + 0.1f * e;
      g.at(x, y) = std::clamp(v, 0.0f, 1.0f);
    }
  return g;
}

struct RiskConfig {
  double band_km = 1.0;
  double sigma_km = 0.4;
  double settlement_weight = 1.0;  // forest-settlement boundaries
  double water_weight = 0.35;      // forest-water boundaries
  double background = 0.0001;      // relative weight off the boundary band
  double seasonal_amplitude = 0.3;
};

struct RiskSurface {
  std::uint32_t width_px = 0, height_px = 0;
  double km_per_px = 0.1;
  Raster risk;                      // expected events per pixel in an average month
  std::array<double, 12> seasonal{};  // multipliers, mean 1
  std::vector<std::uint8_t> band;   // 1 where within band_km of a forest boundary

  double total() const {
    double s = 0.0;
    for (float v : risk.data()) s += v;
    return s;
  }
  double expected_in_month(int month) const { return total() * seasonal[static_cast<std::size_t>(month - 1)]; }
};

inline RiskSurface risk_surface(const LandscapeRaster& L, double monthly_rate_per_100km2,
                                const RiskConfig& cfg = {}) {
  if (!(monthly_rate_per_100km2 >= 0)) throw std::invalid_argument("risk_surface: negative rate");
  const std::uint32_t W = L.width_px, H = L.height_px;
  const std::size_t n = static_cast<std::size_t>(W) * H;
  RiskSurface S;
  S.width_px = W;
  S.height_px = H;
  S.km_per_px = L.km_per_px;
  S.risk = Raster(W, H, 1);
  S.band.assign(n, 0);
  for (int m = 0; m < 12; ++m)
    S.seasonal[static_cast<std::size_t>(m)] = 1.0 + cfg.seasonal_amplitude * std::cos(2 * kPi * (m + 1 - 7) / 12.0);

  auto forest = [&](std::uint32_t x, std::uint32_t y) {
    return L.channels.at(x, y, kForest) > 0.5f;
  };
  auto settle = [&](std::uint32_t x, std::uint32_t y) { return L.channels.at(x, y, kSettlement) > 0.5f; };
  auto water = [&](std::uint32_t x, std::uint32_t y) { return L.channels.at(x, y, kWater) > 0.5f; };

  // Squared distance (px^2) to the nearest forest-settlement and forest-water boundary pixel.
  const int band_px = static_cast<int>(std::ceil(cfg.band_km / L.km_per_px));
  std::vector<double> d_fs(n, 1e300), d_fw(n, 1e300);
  auto stamp = [&](std::vector<double>& d, std::uint32_t bx, std::uint32_t by) {
    for (int dy = -band_px; dy <= band_px; ++dy)
      for (int dx = -band_px; dx <= band_px; ++dx) {
        const auto x = static_cast<std::int64_t>(bx) + dx, y = static_cast<std::int64_t>(by) + dy;
        if (x < 0 || y < 0 || x >= W || y >= H) continue;
        auto& v = d[static_cast<std::size_t>(y) * W + static_cast<std::size_t>(x)];
        v = std::min(v, static_cast<double>(dx * dx + dy * dy));
      }
  };
  for (std::uint32_t y = 0; y < H; ++y)
    for (std::uint32_t x = 0; x < W; ++x) {
      bool fs = false, fw = false;
      const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (auto [dx, dy] : nb) {
        const auto nx = static_cast<std::int64_t>(x) + dx, ny = static_cast<std::int64_t>(y) + dy;
        if (nx < 0 || ny < 0 || nx >= W || ny >= H) continue;
        const auto ux = static_cast<std::uint32_t>(nx), uy = static_cast<std::uint32_t>(ny);
        if (forest(x, y) && settle(ux, uy)) fs = true;
        if (settle(x, y) && forest(ux, uy)) fs = true;
        if (forest(x, y) && water(ux, uy)) fw = true;
        if (water(x, y) && forest(ux, uy)) fw = true;
      }
      if (fs) stamp(d_fs, x, y);
      if (fw) stamp(d_fw, x, y);
    }

  const double km2 = L.km_per_px * L.km_per_px;
  const double two_s2 = 2 * cfg.sigma_km * cfg.sigma_km;
  const double band2 = cfg.band_km * cfg.band_km;
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = static_cast<std::uint32_t>(i % W), y = static_cast<std::uint32_t>(i / W);
    if (water(x, y)) continue;
    const double fs2 = d_fs[i] * km2, fw2 = d_fw[i] * km2;
    double r = cfg.background;
    if (fs2 <= band2) r += cfg.settlement_weight * std::exp(-fs2 / two_s2);
    if (fw2 <= band2) r += cfg.water_weight * std::exp(-fw2 / two_s2);
    S.band[i] = (fs2 <= band2 || fw2 <= band2) ? 1 : 0;
    S.risk.at(x, y) = static_cast<float>(r);
    mass += static_cast<float>(r);
  }
  const double target = monthly_rate_per_100km2 * L.area_km2() / 100.0;
  const double scale = mass > 0 ? target / mass : 0.0;
  for (auto& v : S.risk.data()) v = static_cast<float>(v * scale);
  return S;
}

namespace detail {

template <class T, std::size_t N>
std::size_t categorical(std::mt19937_64& g, const std::array<T, N>& probs) {
  double u = rng::uniform01(g), acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return N - 1;
}

}  // namespace detail

// Inhomogeneous Poisson sampling of the planted surface, month by month.
inline std::vector<ConflictEvent> gen_events(const RiskSurface& S, std::span<const TimePeriod> months,
                                             std::uint64_t seed, const GeoPoint& origin,
                                             std::span<const PlanarPoint> villages = {}) {
  std::vector<ConflictEvent> out;
  const std::size_t n = static_cast<std::size_t>(S.width_px) * S.height_px;
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += S.risk.data()[i];
    cdf[i] = acc;
  }
  if (acc <= 0.0) return out;
  std::mt19937_64 gen(rng::mix(seed, 0xe7e47));
  static constexpr std::array<double, 4> kAnimal = {0.35, 0.25, 0.30, 0.10};
  static constexpr std::array<double, 2> kVictim = {0.2, 0.8};
  static constexpr std::array<double, 2> kOutcome = {0.6, 0.4};
  for (const auto& period : months) {
    std::poisson_distribution<long> pois(acc * S.seasonal[static_cast<std::size_t>(period.month - 1)]);
    const long count = pois(gen);
    for (long k = 0; k < count; ++k) {
      std::size_t pick;
      do {
        const double u = rng::uniform01(gen) * acc;
        pick = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      } while (pick >= n || S.risk.data()[pick] <= 0.0f);
      const double px = static_cast<double>(pick % S.width_px) + rng::uniform01(gen);
      const double py = static_cast<double>(pick / S.width_px) + rng::uniform01(gen);
      ConflictEvent e;
      const PlanarPoint pos{px * S.km_per_px, py * S.km_per_px};
      e.location = unproject(pos, origin);
      e.period = period;
      e.day = 1 + static_cast<int>(gen() % 28);
      e.animal = static_cast<Animal>(detail::categorical(gen, kAnimal));
      e.victim = static_cast<Victim>(detail::categorical(gen, kVictim));
      e.outcome = static_cast<Outcome>(detail::categorical(gen, kOutcome));
      std::size_t best = 0;
      double bd = 1e300;
      for (std::size_t v = 0; v < villages.size(); ++v) {
        const double dx = villages[v].x - pos.x, dy = villages[v].y - pos.y;
        if (dx * dx + dy * dy < bd) bd = dx * dx + dy * dy, best = v;
      }
      char id[48];
      std::snprintf(id, sizeof id, "S%llu-%06zu", static_cast<unsigned long long>(seed), out.size());
      e.id = id;
      char vname[24];
      std::snprintf(vname, sizeof vname, "V%03zu", best);
      e.village = villages.empty() ? "V000" : vname;
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace terracast
