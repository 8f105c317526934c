#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "terracast/learn/network.hpp"

namespace terracast::learn {

// Weighted softmax cross-entropy for one sample: weight[target] * -log softmax(z)[target].
// Writes d(loss)/dz into `dlogits` when non-empty.
template <class T>
double softmax_xent(std::span<const T> logits, std::size_t target, double weight, std::span<T> dlogits = {}) {
  if (target >= logits.size()) throw std::invalid_argument("softmax_xent: target out of range");
  double mx = -1e300;
  for (T z : logits) mx = std::max(mx, static_cast<double>(z));
  double sum = 0.0;
  for (T z : logits) sum += std::exp(static_cast<double>(z) - mx);
  const double lse = mx + std::log(sum);
  if (!dlogits.empty())
    for (std::size_t c = 0; c < logits.size(); ++c) {
      const double p = std::exp(static_cast<double>(logits[c]) - lse);
      dlogits[c] = static_cast<T>(weight * (p - (c == target ? 1.0 : 0.0)));
    }
  return weight * (lse - static_cast<double>(logits[target]));
}

// Inverse class frequency, normalized to mean 1 over the classes present; absent classes get 0.
inline std::vector<double> inverse_frequency_weights(std::span<const int> labels, std::size_t n_classes) {
  std::vector<double> counts(n_classes, 0.0), w(n_classes, 0.0);
  for (int y : labels) counts.at(static_cast<std::size_t>(y)) += 1.0;
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < n_classes; ++c)
    if (counts[c] > 0) {
      w[c] = 1.0 / counts[c];
      sum += w[c];
      ++present;
    }
  if (present == 0) return std::vector<double>(n_classes, 1.0);
  for (auto& v : w) v *= static_cast<double>(present) / sum;
  return w;
}

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {
    if (!(cfg.lr > 0)) throw std::invalid_argument("adam: lr must be positive");
  }

  // One bias-corrected step over every parameter block of `net`, gradients scaled by `grad_scale`.
  void step(Network<T>& net, double grad_scale = 1.0) {
    if (m_.empty()) {
      net.for_each_param([&](std::span<T> p, std::span<T>) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
      });
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    std::size_t blk = 0;
    net.for_each_param([&](std::span<T> p, std::span<T> g) {
      auto& m = m_[blk];
      auto& v = v_[blk];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = static_cast<double>(g[i]) * grad_scale;
        m[i] = cfg_.beta1 * m[i] + (1 - cfg_.beta1) * gi;
        v[i] = cfg_.beta2 * v[i] + (1 - cfg_.beta2) * gi * gi;
        const double mh = m[i] / bc1, vh = v[i] / bc2;
        p[i] = static_cast<T>(static_cast<double>(p[i]) - cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps));
      }
      ++blk;
    });
  }

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace terracast::learn
