#pragma once

// Central finite-difference checks for single layers and whole networks (double precision).

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "terracast/learn/network.hpp"
#include "terracast/learn/optim.hpp"

namespace gradcheck {

using namespace terracast::learn;

inline constexpr double kStep = 1e-5;

// |a - n| / max(|a|, |n|, floor). Central differences carry about eps * |loss| / h = 2e-11 of round-off, so
// entries below the floor must agree to within 1e-4 * floor in absolute terms instead.
inline double rel_error(double a, double n, double floor = 1e-6) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

struct Result {
  double max_rel = 0;
  std::size_t checked = 0;
};

inline std::vector<double> random_vec(std::size_t n, std::mt19937_64& g, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(g);
  return v;
}

// Loss = sum_i c_i * out_i for a single layer; checks parameter and input gradients.
inline Result check_layer(const LayerSpec& spec, Shape in, std::uint64_t seed, std::size_t n_scalars = 0) {
  std::mt19937_64 g(seed);
  auto layer = make_layer<double>(spec, in);
  layer->init(g);
  // Bias-like parameters start at zero; perturb so every path is exercised.
  for (auto& p : layer->params()) p += std::uniform_real_distribution<double>(-0.1, 0.1)(g);
  const auto x = random_vec(in.size(), g);
  const auto sc = random_vec(n_scalars, g);
  const auto c = random_vec(layer->out_shape().size(), g);
  std::vector<double> out(layer->out_shape().size()), din(in.size());

  auto loss = [&](const std::vector<double>& input) {
    layer->forward(input, sc, out);
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += c[i] * out[i];
    return s;
  };
  std::fill(layer->grads().begin(), layer->grads().end(), 0.0);
  loss(x);
  layer->backward(c, din);
  const std::vector<double> pgrad(layer->grads().begin(), layer->grads().end());

  Result r;
  auto params = layer->params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + kStep;
    const double lp = loss(x);
    params[i] = keep - kStep;
    const double lm = loss(x);
    params[i] = keep;
    r.max_rel = std::max(r.max_rel, rel_error(pgrad[i], (lp - lm) / (2 * kStep)));
    ++r.checked;
  }
  auto xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + kStep;
    const double lp = loss(xp);
    xp[i] = x[i] - kStep;
    const double lm = loss(xp);
    xp[i] = x[i];
    r.max_rel = std::max(r.max_rel, rel_error(din[i], (lp - lm) / (2 * kStep)));
    ++r.checked;
  }
  return r;
}

// Weighted softmax cross-entropy through a full network; every parameter and input is checked.
inline Result check_network(const NetworkSpec& spec, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  Network<double> net(spec);
  net.init(seed);
  net.for_each_param([&](std::span<double> p, std::span<double>) {
    for (auto& v : p) v += std::uniform_real_distribution<double>(-0.05, 0.05)(g);
  });
  const auto x = random_vec(spec.input_shape.size(), g, 0.0, 1.0);
  const auto sc = random_vec(spec.multi_head ? 2 : 0, g, 0.0, 1.0);
  const std::size_t target = g() % spec.n_classes;
  const double weight = 0.5 + std::uniform_real_distribution<double>(0, 1)(g);

  std::vector<double> dz(spec.n_classes), din(spec.input_shape.size());
  auto loss = [&](const std::vector<double>& input) {
    return softmax_xent<double>(net.forward(input, sc), target, weight);
  };
  net.zero_grad();
  softmax_xent<double>(net.forward(x, sc), target, weight, dz);
  net.backward(dz, din);
  std::vector<double> pgrad;
  net.for_each_param([&](std::span<double>, std::span<double> gr) { pgrad.insert(pgrad.end(), gr.begin(), gr.end()); });

  Result r;
  auto flat = net.flat_params();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double keep = flat[i];
    flat[i] = keep + kStep;
    net.set_flat_params(flat);
    const double lp = loss(x);
    flat[i] = keep - kStep;
    net.set_flat_params(flat);
    const double lm = loss(x);
    flat[i] = keep;
    r.max_rel = std::max(r.max_rel, rel_error(pgrad[i], (lp - lm) / (2 * kStep)));
    ++r.checked;
  }
  net.set_flat_params(flat);
  auto xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + kStep;
    const double lp = loss(xp);
    xp[i] = x[i] - kStep;
    const double lm = loss(xp);
    xp[i] = x[i];
    r.max_rel = std::max(r.max_rel, rel_error(din[i], (lp - lm) / (2 * kStep)));
    ++r.checked;
  }
  return r;
}

struct LayerCase {
  const char* name;
  LayerSpec spec;
  Shape in;
  std::size_t scalars;
};

inline std::vector<LayerCase> layer_cases() {
  return {{"conv3x3", LayerSpec::conv(4, 3), {2, 7, 6}, 0},
          {"conv1x1", LayerSpec::conv(3, 1), {2, 4, 4}, 0},
          {"maxpool2", LayerSpec::maxpool(2), {3, 6, 8}, 0},
          {"dense", LayerSpec::dense(5), {3, 2, 2}, 0},
          {"relu", LayerSpec::relu(), {2, 3, 3}, 0},
          {"flatten", LayerSpec::flatten(), {2, 3, 2}, 0},
          {"concat_scalars", LayerSpec::concat_scalars(2), {6, 1, 1}, 2}};
}

}  // namespace gradcheck
