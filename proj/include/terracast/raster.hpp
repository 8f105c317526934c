#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace terracast {

static_assert(std::endian::native == std::endian::little, "TCR/weight IO assumes a little-endian host");

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::span<const std::byte> bytes,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(std::as_bytes(std::span(s.data(), s.size())), h);
}

// Row-major, channel-interleaved float image. Row 0 is the southern edge.
class Raster {
 public:
  Raster() = default;
  Raster(std::uint32_t width, std::uint32_t height, std::uint32_t channels, float fill = 0.0f)
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::uint32_t channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  float& at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  float at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  Raster channel(std::uint32_t c) const {
    Raster out(width_, height_, 1);
    for (std::size_t i = 0; i < static_cast<std::size_t>(width_) * height_; ++i)
      out.data_[i] = data_[i * channels_ + c];
    return out;
  }

  std::uint64_t checksum() const { return fnv1a64(std::as_bytes(std::span(data_))); }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::uint32_t width_ = 0, height_ = 0, channels_ = 0;
  std::vector<float> data_;
};

// TCR layout: "TCR1", u32 width, u32 height, u32 channels, f32[w*h*c] row-major interleaved,
// u64 FNV-1a of the f32 payload bytes. All little-endian.
inline void write_tcr(std::ostream& out, const Raster& r) {
  out.write("TCR1", 4);
  const std::uint32_t dims[3] = {r.width(), r.height(), r.channels()};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(r.data().data()),
            static_cast<std::streamsize>(r.data().size() * sizeof(float)));
  const std::uint64_t sum = r.checksum();
  out.write(reinterpret_cast<const char*>(&sum), sizeof sum);
}

inline Raster read_tcr(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "TCR1", 4) != 0)
    throw std::runtime_error("tcr: bad magic");
  std::uint32_t dims[3];
  if (!in.read(reinterpret_cast<char*>(dims), sizeof dims)) throw std::runtime_error("tcr: truncated");
  Raster r(dims[0], dims[1], dims[2]);
  if (!in.read(reinterpret_cast<char*>(r.data().data()),
               static_cast<std::streamsize>(r.data().size() * sizeof(float))))
    throw std::runtime_error("tcr: truncated payload");
  std::uint64_t sum = 0;
  if (!in.read(reinterpret_cast<char*>(&sum), sizeof sum)) throw std::runtime_error("tcr: missing checksum");
  if (sum != r.checksum()) throw std::runtime_error("tcr: checksum mismatch");
  return r;
}

inline void write_tcr(const std::string& path, const Raster& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_tcr(out, r);
}

inline Raster read_tcr(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_tcr(in);
}

// Area-weighted average of channel `c` over the pixel-space rectangle [x0,x1) x [y0,y1),
// resampled onto an out_w x out_h grid. Works for both up- and down-sampling.
inline Raster resample_area(const Raster& src, std::uint32_t c, double x0, double y0, double x1,
                            double y1, std::uint32_t out_w, std::uint32_t out_h) {
  if (x0 < -1e-9 || y0 < -1e-9 || x1 > src.width() + 1e-9 || y1 > src.height() + 1e-9 || x1 <= x0 ||
      y1 <= y0)
    throw std::invalid_argument("resample_area: window outside raster");
  Raster out(out_w, out_h, 1);
  const double sx = (x1 - x0) / out_w, sy = (y1 - y0) / out_h;
  // Per-axis overlap weights between output cells and source pixels.
  auto weights = [](double start, double step, std::uint32_t n, std::uint32_t limit) {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> w(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      const double a = start + i * step, b = start + (i + 1) * step;
      const auto first = static_cast<std::int64_t>(std::floor(a));
      const auto last = static_cast<std::int64_t>(std::ceil(b));
      for (std::int64_t p = std::max<std::int64_t>(first, 0);
           p < std::min<std::int64_t>(last, limit); ++p) {
        const double ov = std::min<double>(b, p + 1) - std::max<double>(a, p);
        if (ov > 0) w[i].push_back({static_cast<std::uint32_t>(p), ov / step});
      }
    }
    return w;
  };
  const auto wx = weights(x0, sx, out_w, src.width());
  const auto wy = weights(y0, sy, out_h, src.height());
  for (std::uint32_t j = 0; j < out_h; ++j)
    for (std::uint32_t i = 0; i < out_w; ++i) {
      double acc = 0.0;
      for (auto [py, fy] : wy[j])
        for (auto [px, fx] : wx[i]) acc += fx * fy * src.at(px, py, c);
      out.at(i, j) = static_cast<float>(acc);
    }
  return out;
}

}  // namespace terracast
