#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "terracast/learn/layers.hpp"
#include "terracast/raster.hpp"

namespace terracast::learn {

// How a tile record is presented to the network.
enum class InputMode : std::uint32_t {
  raw = 0,              // raster channels as-is, no side scalars
  temporal_planes = 1,  // grayscale + constant month and year planes (3 channels)
  multihead = 2,        // grayscale only; month/year join after the convolutions
};

struct NetworkSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  std::size_t n_classes = 3;
  bool multi_head = false;
  InputMode input = InputMode::temporal_planes;
  Shape input_shape{3, 64, 64};
};

namespace presets {

inline std::vector<LayerSpec> conv_trunk_n2() {
  return {LayerSpec::conv(16, 3), LayerSpec::relu(), LayerSpec::maxpool(2),
          LayerSpec::conv(32, 3), LayerSpec::relu(), LayerSpec::maxpool(2), LayerSpec::flatten()};
}

inline NetworkSpec n2_like(std::string name, std::size_t classes, std::uint32_t res, bool multi_head) {
  NetworkSpec s;
  s.name = std::move(name);
  s.n_classes = classes;
  s.multi_head = multi_head;
  s.input = multi_head ? InputMode::multihead : InputMode::temporal_planes;
  s.input_shape = {multi_head ? 1u : 3u, res, res};
  s.layers = conv_trunk_n2();
  if (multi_head) s.layers.push_back(LayerSpec::concat_scalars(2));
  s.layers.push_back(LayerSpec::dense(64));
  s.layers.push_back(LayerSpec::relu());
  s.layers.push_back(LayerSpec::dense(static_cast<std::uint32_t>(classes)));
  return s;
}

}  // namespace presets

// N1..N6 with the desk defaults; `res` is the tile side in pixels.
inline NetworkSpec cnn_spec(const std::string& name, std::uint32_t res = 64) {
  if (name == "N1") return presets::n2_like("N1", 5, res, false);
  if (name == "N2") return presets::n2_like("N2", 3, res, false);
  if (name == "N3") return presets::n2_like("N3", 5, res, true);
  if (name == "N4") return presets::n2_like("N4", 3, res, true);
  if (name == "N5") return presets::n2_like("N5", 2, res, false);
  if (name == "N6") {
    NetworkSpec s;
    s.name = "N6";
    s.n_classes = 2;
    s.input_shape = {3, res, res};
    s.layers = {LayerSpec::conv(16, 3), LayerSpec::relu(), LayerSpec::conv(16, 3), LayerSpec::relu(),
                LayerSpec::maxpool(2),  LayerSpec::conv(32, 3), LayerSpec::relu(), LayerSpec::maxpool(2),
                LayerSpec::flatten(),   LayerSpec::dense(128), LayerSpec::relu(), LayerSpec::dense(2)};
    return s;
  }
  throw std::invalid_argument("unknown network '" + name + "' (expected N1..N6)");
}

// One hidden layer of 100 relu units.
inline NetworkSpec mlp_spec(std::size_t n_features, std::size_t n_out, std::size_t hidden = 100) {
  NetworkSpec s;
  s.name = "mlp";
  s.n_classes = n_out;
  s.input = InputMode::raw;
  s.input_shape = {n_features, 1, 1};
  s.layers = {LayerSpec::dense(static_cast<std::uint32_t>(hidden)), LayerSpec::relu(),
              LayerSpec::dense(static_cast<std::uint32_t>(n_out))};
  return s;
}

// Multinomial logistic regression: a single affine layer under softmax cross-entropy.
inline NetworkSpec logistic_spec(std::size_t n_features, std::size_t n_classes) {
  NetworkSpec s;
  s.name = "logistic";
  s.n_classes = n_classes;
  s.input = InputMode::raw;
  s.input_shape = {n_features, 1, 1};
  s.layers = {LayerSpec::dense(static_cast<std::uint32_t>(n_classes))};
  return s;
}

template <class T>
class Network {
 public:
  Network() = default;
  explicit Network(NetworkSpec spec) : spec_(std::move(spec)) {
    if (spec_.multi_head && spec_.input != InputMode::multihead)
      throw std::invalid_argument("network: multi_head requires multihead input");
    Shape s = spec_.input_shape;
    std::size_t widest = s.size();
    for (const auto& ls : spec_.layers) {
      layers_.push_back(make_layer<T>(ls, s));
      s = layers_.back()->out_shape();
      widest = std::max(widest, s.size());
    }
    if (layers_.empty()) throw std::invalid_argument("network: no layers");
    if (s.size() != spec_.n_classes)
      throw std::invalid_argument("network " + spec_.name + ": output width " + std::to_string(s.size()) +
                                  " != n_classes " + std::to_string(spec_.n_classes));
    acts_.resize(layers_.size() + 1);
    acts_[0].resize(spec_.input_shape.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) acts_[i + 1].resize(layers_[i]->out_shape().size());
    g0_.resize(widest);
    g1_.resize(widest);
  }

  Network(const Network& o) : spec_(o.spec_), acts_(o.acts_), g0_(o.g0_), g1_(o.g1_) {
    for (const auto& l : o.layers_) layers_.push_back(l->clone());
  }
  Network& operator=(const Network& o) {
    if (this != &o) *this = Network(o);
    return *this;
  }
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const NetworkSpec& spec() const { return spec_; }
  std::size_t layer_count() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_[i]; }

  void init(std::uint64_t seed) {
    std::mt19937_64 g(seed);
    for (auto& l : layers_) l->init(g);
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l->params().size();
    return n;
  }

  // Forward pass; returns the logits (valid until the next forward).
  std::span<const T> forward(std::span<const T> input, std::span<const T> scalars = {}) {
    if (input.size() != acts_[0].size()) throw std::invalid_argument("network: input size mismatch");
    std::copy(input.begin(), input.end(), acts_[0].begin());
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->forward(acts_[i], scalars, acts_[i + 1]);
    return acts_.back();
  }

  // Backpropagates d(loss)/d(logits) through the last forward pass, accumulating parameter grads.
  // If `dinput` is non-empty it receives the gradient w.r.t. the input.
  void backward(std::span<const T> dlogits, std::span<T> dinput = {}) {
    std::copy(dlogits.begin(), dlogits.end(), g0_.begin());
    std::span<T> cur(g0_.data(), dlogits.size());
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const bool need = i > 0 || !dinput.empty();
      std::span<T> din = need ? std::span<T>((cur.data() == g0_.data() ? g1_ : g0_).data(), layers_[i]->in_shape().size())
                              : std::span<T>{};
      layers_[i]->backward(cur, din);
      if (!need) break;
      cur = din;
    }
    if (!dinput.empty()) std::copy(cur.begin(), cur.end(), dinput.begin());
  }

  void zero_grad() {
    for (auto& l : layers_) std::fill(l->grads().begin(), l->grads().end(), T(0));
  }

  template <class F>
  void for_each_param(F&& f) {
    for (auto& l : layers_) f(l->params(), l->grads());
  }

  std::vector<double> flat_params() const {
    std::vector<double> out;
    for (const auto& l : layers_)
      for (T v : l->params()) out.push_back(static_cast<double>(v));
    return out;
  }
  void set_flat_params(std::span<const double> p) {
    std::size_t k = 0;
    for (auto& l : layers_)
      for (T& v : l->params()) {
        if (k >= p.size()) throw std::invalid_argument("network: parameter count mismatch");
        v = static_cast<T>(p[k++]);
      }
    if (k != p.size()) throw std::invalid_argument("network: parameter count mismatch");
  }

  // FNV-1a over the parameters widened to f64 (matches the weight file checksum).
  std::uint64_t checksum() const {
    const auto p = flat_params();
    return fnv1a64(std::as_bytes(std::span(p)));
  }

 private:
  NetworkSpec spec_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  std::vector<Buffer<T>> acts_;
  Buffer<T> g0_, g1_;
};

}  // namespace terracast::learn
