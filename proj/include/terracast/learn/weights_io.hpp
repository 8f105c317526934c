#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "terracast/learn/network.hpp"

namespace terracast::learn {

// Weight file layout (little-endian):
//   "TCW1"
//   u32 name length, name bytes
//   u32 n_classes, u32 multi_head, u32 input mode, u32 input c, h, w
//   u32 layer count; per layer: u32 kind, u32 a, u32 b, u64 parameter count
//   f64 parameters, layer by layer
//   u64 FNV-1a of the f64 parameter bytes
namespace detail {

template <class V>
void put(std::ostream& o, V v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class V>
V get(std::istream& i) {
  V v{};
  if (!i.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("weights: truncated file");
  return v;
}

}  // namespace detail

template <class T>
void write_weights(std::ostream& out, Network<T>& net) {
  const auto& s = net.spec();
  out.write("TCW1", 4);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
  out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.n_classes));
  detail::put<std::uint32_t>(out, s.multi_head ? 1u : 0u);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.input));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.input_shape.c));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.input_shape.h));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.input_shape.w));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.layers.size()));
  for (std::size_t i = 0; i < s.layers.size(); ++i) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.layers[i].kind));
    detail::put<std::uint32_t>(out, s.layers[i].a);
    detail::put<std::uint32_t>(out, s.layers[i].b);
    detail::put<std::uint64_t>(out, net.layer(i).params().size());
  }
  const auto p = net.flat_params();
  out.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
  detail::put<std::uint64_t>(out, net.checksum());
}

template <class T>
Network<T> read_weights(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "TCW1", 4) != 0) throw std::runtime_error("weights: bad magic");
  NetworkSpec s;
  const auto nlen = detail::get<std::uint32_t>(in);
  if (nlen > 256) throw std::runtime_error("weights: implausible name length");
  s.name.resize(nlen);
  in.read(s.name.data(), nlen);
  s.n_classes = detail::get<std::uint32_t>(in);
  s.multi_head = detail::get<std::uint32_t>(in) != 0;
  s.input = static_cast<InputMode>(detail::get<std::uint32_t>(in));
  s.input_shape.c = detail::get<std::uint32_t>(in);
  s.input_shape.h = detail::get<std::uint32_t>(in);
  s.input_shape.w = detail::get<std::uint32_t>(in);
  const auto nl = detail::get<std::uint32_t>(in);
  std::vector<std::uint64_t> counts;
  for (std::uint32_t i = 0; i < nl; ++i) {
    LayerSpec ls;
    ls.kind = static_cast<LayerKind>(detail::get<std::uint32_t>(in));
    ls.a = detail::get<std::uint32_t>(in);
    ls.b = detail::get<std::uint32_t>(in);
    counts.push_back(detail::get<std::uint64_t>(in));
    s.layers.push_back(ls);
  }
  Network<T> net(s);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] != net.layer(i).params().size()) throw std::runtime_error("weights: layer shape mismatch");
    total += counts[i];
  }
  std::vector<double> p(total);
  if (!in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(total * sizeof(double))))
    throw std::runtime_error("weights: truncated parameters");
  net.set_flat_params(p);
  if (detail::get<std::uint64_t>(in) != net.checksum()) throw std::runtime_error("weights: checksum mismatch");
  return net;
}

template <class T>
void save_weights(const std::string& path, Network<T>& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_weights(out, net);
}

template <class T>
Network<T> load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_weights<T>(in);
}

}  // namespace terracast::learn
