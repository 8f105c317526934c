#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <new>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace terracast::learn {

// (channels, height, width); flat vectors are (n, 1, 1).
struct Shape {
  std::size_t c = 0, h = 1, w = 1;
  std::size_t size() const { return c * h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

enum class LayerKind : std::uint32_t { conv = 0, maxpool = 1, dense = 2, relu = 3, flatten = 4, concat_scalars = 5 };

struct LayerSpec {
  LayerKind kind;
  std::uint32_t a = 0;  // conv: filters, maxpool: stride, dense: units, concat: scalar count
  std::uint32_t b = 0;  // conv: kernel size

  static LayerSpec conv(std::uint32_t filters, std::uint32_t d) { return {LayerKind::conv, filters, d}; }
  static LayerSpec maxpool(std::uint32_t s) { return {LayerKind::maxpool, s, 0}; }
  static LayerSpec dense(std::uint32_t n) { return {LayerKind::dense, n, 0}; }
  static LayerSpec relu() { return {LayerKind::relu, 0, 0}; }
  static LayerSpec flatten() { return {LayerKind::flatten, 0, 0}; }
  static LayerSpec concat_scalars(std::uint32_t n) { return {LayerKind::concat_scalars, n, 0}; }

  std::string str() const {
    switch (kind) {
      case LayerKind::conv: return "conv" + std::to_string(b) + "x" + std::to_string(b) + "(" + std::to_string(a) + ")";
      case LayerKind::maxpool: return "maxpool" + std::to_string(a);
      case LayerKind::dense: return "dense(" + std::to_string(a) + ")";
      case LayerKind::relu: return "relu";
      case LayerKind::flatten: return "flatten";
      default: return "concat_scalars(" + std::to_string(a) + ")";
    }
  }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// 64-byte aligned storage for every buffer Eigen maps. Vectorized kernels peel leading elements by
// address alignment, so with plain std::vector the summation order (and the last bits of results)
// would depend on where malloc placed the buffer.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <class T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using CMatMap = Eigen::Map<const RowMat<T>>;
template <class T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <class T>
using CVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

// One layer of a sequential network. Processes one sample at a time and keeps whatever it needs
// from the forward pass for the matching backward pass. Parameter gradients accumulate until
// zero_grad().
template <class T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::unique_ptr<Layer> clone() const = 0;
  virtual LayerSpec spec() const = 0;
  virtual Shape in_shape() const = 0;
  virtual Shape out_shape() const = 0;
  virtual void forward(std::span<const T> in, std::span<const T> scalars, std::span<T> out) = 0;
  // din may be empty when the caller does not need the input gradient.
  virtual void backward(std::span<const T> dout, std::span<T> din) = 0;
  virtual std::span<T> params() { return {}; }
  virtual std::span<T> grads() { return {}; }
  virtual void init(std::mt19937_64&) {}
};

namespace detail {

template <class T>
void he_uniform(std::span<T> w, std::size_t fan_in, std::mt19937_64& g) {
  const double lim = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : w) v = static_cast<T>((static_cast<double>(g() >> 11) * 0x1.0p-53 * 2.0 - 1.0) * lim);
}

}  // namespace detail

// Valid (no padding) convolution, stride 1, via im2col + GEMM.
template <class T>
class Conv2D final : public Layer<T> {
 public:
  Conv2D(Shape in, std::size_t filters, std::size_t d) : in_(in), f_(filters), d_(d) {
    if (d == 0 || in.h < d || in.w < d) throw std::invalid_argument("conv: kernel larger than input");
    ho_ = in.h - d + 1;
    wo_ = in.w - d + 1;
    params_.assign(f_ * in_.c * d_ * d_ + f_, T(0));
    grads_.assign(params_.size(), T(0));
    cols_.resize(in_.c * d_ * d_ * ho_ * wo_);
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2D>(*this); }
  LayerSpec spec() const override { return LayerSpec::conv(static_cast<std::uint32_t>(f_), static_cast<std::uint32_t>(d_)); }
  Shape in_shape() const override { return in_; }
  Shape out_shape() const override { return {f_, ho_, wo_}; }
  void init(std::mt19937_64& g) override {
    detail::he_uniform(std::span(params_).first(f_ * in_.c * d_ * d_), in_.c * d_ * d_, g);
    std::fill(params_.end() - static_cast<std::ptrdiff_t>(f_), params_.end(), T(0));
  }
  std::span<T> params() override { return params_; }
  std::span<T> grads() override { return grads_; }

  void forward(std::span<const T> in, std::span<const T>, std::span<T> out) override {
    const std::size_t K = in_.c * d_ * d_, P = ho_ * wo_;
    // cols[(c,ky,kx), (y,x)] = in[c, y+ky, x+kx]
    for (std::size_t c = 0; c < in_.c; ++c)
      for (std::size_t ky = 0; ky < d_; ++ky)
        for (std::size_t kx = 0; kx < d_; ++kx) {
          T* row = cols_.data() + ((c * d_ + ky) * d_ + kx) * P;
          for (std::size_t y = 0; y < ho_; ++y) {
            const T* src = in.data() + (c * in_.h + y + ky) * in_.w + kx;
            std::copy(src, src + wo_, row + y * wo_);
          }
        }
    CMatMap<T> W(params_.data(), static_cast<Eigen::Index>(f_), static_cast<Eigen::Index>(K));
    CVecMap<T> b(params_.data() + f_ * K, static_cast<Eigen::Index>(f_));
    CMatMap<T> cols(cols_.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
    MatMap<T> Y(out.data(), static_cast<Eigen::Index>(f_), static_cast<Eigen::Index>(P));
    Y.noalias() = W * cols;
    Y.colwise() += b;
  }

  void backward(std::span<const T> dout, std::span<T> din) override {
    const std::size_t K = in_.c * d_ * d_, P = ho_ * wo_;
    CMatMap<T> dY(dout.data(), static_cast<Eigen::Index>(f_), static_cast<Eigen::Index>(P));
    CMatMap<T> cols(cols_.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
    MatMap<T> dW(grads_.data(), static_cast<Eigen::Index>(f_), static_cast<Eigen::Index>(K));
    VecMap<T> db(grads_.data() + f_ * K, static_cast<Eigen::Index>(f_));
    dW.noalias() += dY * cols.transpose();
    db += dY.rowwise().sum();
    if (din.empty()) return;
    dcols_.resize(K * P);
    CMatMap<T> W(params_.data(), static_cast<Eigen::Index>(f_), static_cast<Eigen::Index>(K));
    MatMap<T> dC(dcols_.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
    dC.noalias() = W.transpose() * dY;
    std::fill(din.begin(), din.end(), T(0));
    for (std::size_t c = 0; c < in_.c; ++c)
      for (std::size_t ky = 0; ky < d_; ++ky)
        for (std::size_t kx = 0; kx < d_; ++kx) {
          const T* row = dcols_.data() + ((c * d_ + ky) * d_ + kx) * P;
          for (std::size_t y = 0; y < ho_; ++y) {
            T* dst = din.data() + (c * in_.h + y + ky) * in_.w + kx;
            const T* src = row + y * wo_;
            for (std::size_t x = 0; x < wo_; ++x) dst[x] += src[x];
          }
        }
  }

 private:
  Shape in_;
  std::size_t f_, d_, ho_ = 0, wo_ = 0;
  Buffer<T> params_, grads_, cols_, dcols_;
};

// Non-overlapping s x s max pooling with stride s; trailing rows/columns are discarded.
template <class T>
class MaxPool final : public Layer<T> {
 public:
  MaxPool(Shape in, std::size_t s) : in_(in), s_(s) {
    if (s == 0 || in.h < s || in.w < s) throw std::invalid_argument("maxpool: window larger than input");
    out_ = {in.c, in.h / s, in.w / s};
    arg_.resize(out_.size());
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPool>(*this); }
  LayerSpec spec() const override { return LayerSpec::maxpool(static_cast<std::uint32_t>(s_)); }
  Shape in_shape() const override { return in_; }
  Shape out_shape() const override { return out_; }

  void forward(std::span<const T> in, std::span<const T>, std::span<T> out) override {
    for (std::size_t c = 0; c < out_.c; ++c)
      for (std::size_t y = 0; y < out_.h; ++y)
        for (std::size_t x = 0; x < out_.w; ++x) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t bi = 0;
          for (std::size_t dy = 0; dy < s_; ++dy)
            for (std::size_t dx = 0; dx < s_; ++dx) {
              const std::size_t i = (c * in_.h + y * s_ + dy) * in_.w + x * s_ + dx;
              if (in[i] > best) best = in[i], bi = i;
            }
          const std::size_t o = (c * out_.h + y) * out_.w + x;
          out[o] = best;
          arg_[o] = bi;
        }
  }
  void backward(std::span<const T> dout, std::span<T> din) override {
    if (din.empty()) return;
    std::fill(din.begin(), din.end(), T(0));
    for (std::size_t o = 0; o < arg_.size(); ++o) din[arg_[o]] += dout[o];
  }

 private:
  Shape in_, out_;
  std::size_t s_;
  std::vector<std::size_t> arg_;
};

template <class T>
class Dense final : public Layer<T> {
 public:
  Dense(Shape in, std::size_t units) : n_in_(in.size()), n_out_(units), in_(in) {
    params_.assign(n_out_ * n_in_ + n_out_, T(0));
    grads_.assign(params_.size(), T(0));
    x_.resize(n_in_);
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dense>(*this); }
  LayerSpec spec() const override { return LayerSpec::dense(static_cast<std::uint32_t>(n_out_)); }
  Shape in_shape() const override { return in_; }
  Shape out_shape() const override { return {n_out_, 1, 1}; }
  void init(std::mt19937_64& g) override {
    detail::he_uniform(std::span(params_).first(n_out_ * n_in_), n_in_, g);
    std::fill(params_.end() - static_cast<std::ptrdiff_t>(n_out_), params_.end(), T(0));
  }
  std::span<T> params() override { return params_; }
  std::span<T> grads() override { return grads_; }

  void forward(std::span<const T> in, std::span<const T>, std::span<T> out) override {
    std::copy(in.begin(), in.end(), x_.begin());
    CMatMap<T> W(params_.data(), static_cast<Eigen::Index>(n_out_), static_cast<Eigen::Index>(n_in_));
    CVecMap<T> b(params_.data() + n_out_ * n_in_, static_cast<Eigen::Index>(n_out_));
    CVecMap<T> x(x_.data(), static_cast<Eigen::Index>(n_in_));
    VecMap<T> y(out.data(), static_cast<Eigen::Index>(n_out_));
    y.noalias() = W * x;
    y += b;
  }
  void backward(std::span<const T> dout, std::span<T> din) override {
    CVecMap<T> dy(dout.data(), static_cast<Eigen::Index>(n_out_));
    CVecMap<T> x(x_.data(), static_cast<Eigen::Index>(n_in_));
    MatMap<T> dW(grads_.data(), static_cast<Eigen::Index>(n_out_), static_cast<Eigen::Index>(n_in_));
    VecMap<T> db(grads_.data() + n_out_ * n_in_, static_cast<Eigen::Index>(n_out_));
    dW.noalias() += dy * x.transpose();
    db += dy;
    if (din.empty()) return;
    CMatMap<T> W(params_.data(), static_cast<Eigen::Index>(n_out_), static_cast<Eigen::Index>(n_in_));
    VecMap<T> dx(din.data(), static_cast<Eigen::Index>(n_in_));
    dx.noalias() = W.transpose() * dy;
  }

 private:
  std::size_t n_in_, n_out_;
  Shape in_;
  Buffer<T> params_, grads_, x_;
};

template <class T>
class Relu final : public Layer<T> {
 public:
  explicit Relu(Shape in) : in_(in), mask_(in.size()) {}
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Relu>(*this); }
  LayerSpec spec() const override { return LayerSpec::relu(); }
  Shape in_shape() const override { return in_; }
  Shape out_shape() const override { return in_; }
  void forward(std::span<const T> in, std::span<const T>, std::span<T> out) override {
    for (std::size_t i = 0; i < in.size(); ++i) {
      mask_[i] = in[i] > T(0);
      out[i] = mask_[i] ? in[i] : T(0);
    }
  }
  void backward(std::span<const T> dout, std::span<T> din) override {
    if (din.empty()) return;
    for (std::size_t i = 0; i < dout.size(); ++i) din[i] = mask_[i] ? dout[i] : T(0);
  }

 private:
  Shape in_;
  std::vector<std::uint8_t> mask_;
};

template <class T>
class Flatten final : public Layer<T> {
 public:
  explicit Flatten(Shape in) : in_(in) {}
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Flatten>(*this); }
  LayerSpec spec() const override { return LayerSpec::flatten(); }
  Shape in_shape() const override { return in_; }
  Shape out_shape() const override { return {in_.size(), 1, 1}; }
  void forward(std::span<const T> in, std::span<const T>, std::span<T> out) override {
    std::copy(in.begin(), in.end(), out.begin());
  }
  void backward(std::span<const T> dout, std::span<T> din) override {
    if (!din.empty()) std::copy(dout.begin(), dout.end(), din.begin());
  }

 private:
  Shape in_;
};

// Appends the sample's side scalars (normalized month, year) to a flat feature vector.
template <class T>
class ConcatScalars final : public Layer<T> {
 public:
  ConcatScalars(Shape in, std::size_t n) : in_(in), n_(n) {
    if (in.h != 1 || in.w != 1) throw std::invalid_argument("concat_scalars: needs a flat input (add flatten)");
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ConcatScalars>(*this); }
  LayerSpec spec() const override { return LayerSpec::concat_scalars(static_cast<std::uint32_t>(n_)); }
  Shape in_shape() const override { return in_; }
  Shape out_shape() const override { return {in_.c + n_, 1, 1}; }
  void forward(std::span<const T> in, std::span<const T> scalars, std::span<T> out) override {
    if (scalars.size() < n_) throw std::invalid_argument("concat_scalars: missing side scalars");
    std::copy(in.begin(), in.end(), out.begin());
    std::copy(scalars.begin(), scalars.begin() + static_cast<std::ptrdiff_t>(n_), out.begin() + static_cast<std::ptrdiff_t>(in.size()));
  }
  void backward(std::span<const T> dout, std::span<T> din) override {
    if (!din.empty()) std::copy(dout.begin(), dout.begin() + static_cast<std::ptrdiff_t>(din.size()), din.begin());
  }

 private:
  Shape in_;
  std::size_t n_;
};

template <class T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& s, Shape in) {
  switch (s.kind) {
    case LayerKind::conv: return std::make_unique<Conv2D<T>>(in, s.a, s.b);
    case LayerKind::maxpool: return std::make_unique<MaxPool<T>>(in, s.a);
    case LayerKind::dense: return std::make_unique<Dense<T>>(in, s.a);
    case LayerKind::relu: return std::make_unique<Relu<T>>(in);
    case LayerKind::flatten: return std::make_unique<Flatten<T>>(in);
    case LayerKind::concat_scalars: return std::make_unique<ConcatScalars<T>>(in, s.a);
  }
  throw std::invalid_argument("unknown layer kind");
}

}  // namespace terracast::learn
