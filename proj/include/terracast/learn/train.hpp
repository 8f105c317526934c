#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "terracast/learn/network.hpp"
#include "terracast/learn/optim.hpp"
#include "terracast/parallel.hpp"
#include "terracast/raster.hpp"
#include "terracast/synthgen.hpp"

namespace terracast::learn {

struct Example {
  std::shared_ptr<const Raster> raster;  // grayscale tile, or the feature vector for raw inputs
  std::array<float, 2> scalars{};        // normalized (month, year)
  int label = 0;
  std::uint64_t key = 0;                 // content-derived; fixes the canonical order
};

// Key for examples that carry no natural identity: hash of content and label.
inline std::uint64_t content_key(const Raster& r, std::array<float, 2> scalars, int label) {
  std::uint64_t h = r.checksum();
  h = fnv1a64(std::as_bytes(std::span(scalars)), h);
  return fnv1a64(std::as_bytes(std::span(&label, 1)), h);
}

inline Example make_feature_example(std::span<const double> features, int label) {
  auto r = std::make_shared<Raster>(static_cast<std::uint32_t>(features.size()), 1u, 1u);
  for (std::size_t i = 0; i < features.size(); ++i) r->data()[i] = static_cast<float>(features[i]);
  Example e{r, {}, label, 0};
  e.key = content_key(*r, e.scalars, label);
  return e;
}

// Fills `out` (network input, CHW) from an example.
template <class T>
void build_input(const Example& ex, const NetworkSpec& spec, std::span<T> out) {
  const Raster& r = *ex.raster;
  const std::size_t plane = static_cast<std::size_t>(r.width()) * r.height();
  switch (spec.input) {
    case InputMode::raw: {
      if (plane * r.channels() != out.size()) throw std::invalid_argument("build_input: raw size mismatch");
      for (std::uint32_t c = 0; c < r.channels(); ++c)
        for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = static_cast<T>(r.data()[i * r.channels() + c]);
      return;
    }
    case InputMode::temporal_planes: {
      if (3 * plane != out.size()) throw std::invalid_argument("build_input: tile resolution mismatch");
      for (std::size_t i = 0; i < plane; ++i) {
        out[i] = static_cast<T>(std::clamp(r.data()[i * r.channels()], 0.0f, 1.0f));
        out[plane + i] = static_cast<T>(ex.scalars[0]);
        out[2 * plane + i] = static_cast<T>(ex.scalars[1]);
      }
      return;
    }
    case InputMode::multihead: {
      if (plane != out.size()) throw std::invalid_argument("build_input: tile resolution mismatch");
      for (std::size_t i = 0; i < plane; ++i) out[i] = static_cast<T>(std::clamp(r.data()[i * r.channels()], 0.0f, 1.0f));
      return;
    }
  }
}

enum class ClassWeighting { inverse_frequency, uniform };

struct TrainConfig {
  AdamConfig adam{};
  int epochs = 300;
  std::size_t batch_size = 64;
  ClassWeighting weighting = ClassWeighting::inverse_frequency;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  std::size_t samples_per_epoch = 0;  // 0 = full pass over the training split
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  double val_loss = 0;
  double val_accuracy = 0;
  std::size_t train_size = 0;
};

namespace detail {

inline void fisher_yates(std::vector<std::size_t>& v, std::mt19937_64& g) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[g() % i]);
}

}  // namespace detail

// Index split stratified by label. Each class contributes round(fraction * n_c) validation items.
struct Split {
  std::vector<std::size_t> train, val;
  bool degenerate = false;  // fewer than two classes present
};

inline Split stratified_split(std::span<const Example> data, double val_fraction, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data[i].label].push_back(i);
  Split s;
  s.degenerate = by_class.size() < 2;
  for (auto& [label, idx] : by_class) {
    std::mt19937_64 g(rng::mix(seed, 0x5917 + static_cast<std::uint64_t>(label)));
    detail::fisher_yates(idx, g);
    const auto nv = static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(idx.size())));
    s.val.insert(s.val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::min(nv, idx.size())));
    s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(std::min(nv, idx.size())), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  return s;
}

// Sorts by key so every downstream random choice is independent of the caller's ordering.
inline std::vector<Example> canonical_order(std::vector<Example> data) {
  std::stable_sort(data.begin(), data.end(), [](const Example& a, const Example& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.label < b.label;
  });
  return data;
}

struct EvalResult {
  std::vector<int> predictions;
  double loss = 0;  // weighted mean cross-entropy
  double accuracy = 0;
};

template <class T>
std::vector<int> predict(const Network<T>& net, std::span<const Example> data) {
  std::vector<int> out(data.size(), 0);
  parallel_chunks(data.size(), [&](unsigned, std::size_t b, std::size_t e) {
    Network<T> local = net;
    std::vector<T> in(local.spec().input_shape.size());
    for (std::size_t i = b; i < e; ++i) {
      build_input<T>(data[i], local.spec(), in);
      std::vector<T> sc(data[i].scalars.begin(), data[i].scalars.end());
      auto z = local.forward(in, sc);
      out[i] = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    }
  });
  return out;
}

template <class T>
EvalResult evaluate(const Network<T>& net, std::span<const Example> data, std::span<const double> weights) {
  EvalResult r;
  r.predictions.assign(data.size(), 0);
  std::vector<double> loss(data.size(), 0.0), wsum(data.size(), 0.0);
  parallel_chunks(data.size(), [&](unsigned, std::size_t b, std::size_t e) {
    Network<T> local = net;
    std::vector<T> in(local.spec().input_shape.size());
    for (std::size_t i = b; i < e; ++i) {
      build_input<T>(data[i], local.spec(), in);
      std::vector<T> sc(data[i].scalars.begin(), data[i].scalars.end());
      auto z = local.forward(in, sc);
      r.predictions[i] = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
      const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(data[i].label)];
      loss[i] = softmax_xent<T>(z, static_cast<std::size_t>(data[i].label), w);
      wsum[i] = w;
    }
  });
  double L = 0, W = 0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    L += loss[i];
    W += wsum[i];
    hit += r.predictions[i] == data[i].label;
  }
  r.loss = W > 0 ? L / W : 0.0;
  r.accuracy = data.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(data.size());
  return r;
}

// Mini-batch trainer with a persistent optimizer, so the training set can grow between epochs.
template <class T = float>
class Trainer {
 public:
  Trainer(NetworkSpec spec, TrainConfig cfg) : cfg_(cfg), net_(std::move(spec)), adam_(cfg.adam) {
    if (cfg.batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
    net_.init(rng::mix(cfg.seed, 0x1417));
  }

  // Replaces the training pool; re-splits train/validation and recomputes class weights.
  void set_data(std::vector<Example> data) {
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    for (const auto& e : data)
      if (e.label < 0 || static_cast<std::size_t>(e.label) >= net_.spec().n_classes)
        throw std::invalid_argument("train: label outside network classes");
    data_ = canonical_order(std::move(data));
    split_ = stratified_split(data_, cfg_.val_fraction, rng::mix(cfg_.seed, ++resplits_));
    train_.clear();
    val_.clear();
    for (auto i : split_.train) train_.push_back(data_[i]);
    for (auto i : split_.val) val_.push_back(data_[i]);
    std::vector<int> labels;
    for (const auto& e : train_) labels.push_back(e.label);
    weights_ = cfg_.weighting == ClassWeighting::uniform ? std::vector<double>(net_.spec().n_classes, 1.0)
                                                         : inverse_frequency_weights(labels, net_.spec().n_classes);
  }

  EpochStats run_epoch() {
    ++epoch_;
    std::vector<std::size_t> order(train_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 g(rng::mix(cfg_.seed, 0xe90c00 + static_cast<std::uint64_t>(epoch_)));
    detail::fisher_yates(order, g);
    if (cfg_.samples_per_epoch > 0 && cfg_.samples_per_epoch < order.size()) order.resize(cfg_.samples_per_epoch);

    std::vector<T> in(net_.spec().input_shape.size()), dz(net_.spec().n_classes);
    double loss_sum = 0.0, w_total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg_.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg_.batch_size);
      net_.zero_grad();
      double wsum = 0.0;
      for (std::size_t k = b; k < e; ++k) {
        const Example& ex = train_[order[k]];
        build_input<T>(ex, net_.spec(), in);
        const std::array<T, 2> sc{static_cast<T>(ex.scalars[0]), static_cast<T>(ex.scalars[1])};
        auto z = net_.forward(in, sc);
        const double w = weights_[static_cast<std::size_t>(ex.label)];
        loss_sum += softmax_xent<T>(z, static_cast<std::size_t>(ex.label), w, dz);
        net_.backward(dz);
        wsum += w;
      }
      w_total += wsum;
      if (wsum > 0) adam_.step(net_, 1.0 / wsum);
    }
    EpochStats s;
    s.epoch = epoch_;
    s.train_loss = w_total > 0 ? loss_sum / w_total : 0.0;
    s.train_size = train_.size();
    if (!val_.empty()) {
      const auto ev = evaluate(net_, val_, weights_);
      s.val_loss = ev.loss;
      s.val_accuracy = ev.accuracy;
    }
    trace_.push_back(s);
    return s;
  }

  const Network<T>& network() const { return net_; }
  Network<T>& network() { return net_; }
  const std::vector<EpochStats>& trace() const { return trace_; }
  const std::vector<double>& class_weights() const { return weights_; }
  bool degenerate() const { return split_.degenerate; }
  const TrainConfig& config() const { return cfg_; }
  std::size_t train_size() const { return train_.size(); }
  std::size_t val_size() const { return val_.size(); }

 private:
  TrainConfig cfg_;
  Network<T> net_;
  Adam<T> adam_;
  std::vector<Example> data_, train_, val_;
  Split split_;
  std::vector<double> weights_;
  std::vector<EpochStats> trace_;
  int epoch_ = 0;
  std::uint64_t resplits_ = 0;
};

template <class T = float>
struct TrainResult {
  Network<T> network;
  std::vector<EpochStats> trace;
  std::vector<double> class_weights;
  bool degenerate_stratification = false;
};

template <class T = float>
TrainResult<T> train(const NetworkSpec& spec, std::vector<Example> data, const TrainConfig& cfg) {
  Trainer<T> tr(spec, cfg);
  tr.set_data(std::move(data));
  for (int e = 0; e < cfg.epochs; ++e) tr.run_epoch();
  return {tr.network(), tr.trace(), tr.class_weights(), tr.degenerate()};
}

}  // namespace terracast::learn
