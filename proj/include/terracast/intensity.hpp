#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace terracast {

struct IntensityLabel {
  int class_index = 0;  // 0 = zero-conflict class

  friend bool operator==(const IntensityLabel&, const IntensityLabel&) = default;
};

// Ordered partition of the non-negative integers into count ranges; f(count) -> class.
class IntensityScheme {
 public:
  struct Range {
    std::int64_t lo;
    std::int64_t hi;  // inclusive; kOpen for the final unbounded range
  };
  static constexpr std::int64_t kOpen = std::numeric_limits<std::int64_t>::max();

  // Lower bounds of each range; the first must be 0 and the last range is open-ended.
  explicit IntensityScheme(std::vector<std::int64_t> lower_bounds) {
    if (lower_bounds.empty() || lower_bounds.front() != 0)
      throw std::invalid_argument("IntensityScheme: first range must start at 0");
    for (std::size_t i = 1; i < lower_bounds.size(); ++i)
      if (lower_bounds[i] <= lower_bounds[i - 1])
        throw std::invalid_argument("IntensityScheme: lower bounds must increase");
    if (lower_bounds.size() < 2 || lower_bounds[1] != 1)
      throw std::invalid_argument("IntensityScheme: first range must be exactly [0]");
    for (std::size_t i = 0; i < lower_bounds.size(); ++i) {
      const std::int64_t hi = i + 1 < lower_bounds.size() ? lower_bounds[i + 1] - 1 : kOpen;
      ranges_.push_back({lower_bounds[i], hi});
    }
  }

  // [0] [1-3] [4-6] [7-9] [10+]
  static IntensityScheme five_class() { return IntensityScheme({0, 1, 4, 7, 10}); }
  // [0] [1-9] [10+]
  static IntensityScheme three_class() { return IntensityScheme({0, 1, 10}); }
  // [0] [1+]
  static IntensityScheme two_class() { return IntensityScheme({0, 1}); }

  static IntensityScheme with_classes(int n) {
    switch (n) {
      case 2: return two_class();
      case 3: return three_class();
      case 5: return five_class();
      default: throw std::invalid_argument("IntensityScheme: class count must be 2, 3 or 5");
    }
  }

  int class_count() const { return static_cast<int>(ranges_.size()); }
  const std::vector<Range>& ranges() const { return ranges_; }

  IntensityLabel bucket(std::int64_t count) const {
    if (count < 0) throw std::invalid_argument("bucket: negative count");
    int idx = 0;
    for (std::size_t i = 0; i < ranges_.size(); ++i)
      if (count >= ranges_[i].lo) idx = static_cast<int>(i);
    return {idx};
  }

  std::string range_name(int c) const {
    const auto& r = ranges_.at(static_cast<std::size_t>(c));
    if (r.hi == kOpen) return "[" + std::to_string(r.lo) + "+]";
    if (r.hi == r.lo) return "[" + std::to_string(r.lo) + "]";
    return "[" + std::to_string(r.lo) + "-" + std::to_string(r.hi) + "]";
  }

  friend bool operator==(const IntensityScheme& a, const IntensityScheme& b) {
    if (a.ranges_.size() != b.ranges_.size()) return false;
    for (std::size_t i = 0; i < a.ranges_.size(); ++i)
      if (a.ranges_[i].lo != b.ranges_[i].lo) return false;
    return true;
  }

 private:
  std::vector<Range> ranges_;
};

inline IntensityLabel bucket(std::int64_t count, const IntensityScheme& scheme) {
  return scheme.bucket(count);
}

}  // namespace terracast
