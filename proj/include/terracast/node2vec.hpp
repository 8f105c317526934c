#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "terracast/regions.hpp"
#include "terracast/synthgen.hpp"

namespace terracast {

struct Node2VecConfig {
  std::size_t dims = 128;
  double p = 1.0;  // return parameter
  double q = 1.0;  // in-out parameter
  std::size_t walks_per_node = 10;
  std::size_t walk_length = 80;
  std::size_t window = 10;
  std::size_t negatives = 5;
  int epochs = 5;
  double lr = 0.025;
  std::uint64_t seed = 0;
};

// Unnormalized second-order transition weights out of `cur` when the walk arrived from `prev`
// (prev < 0 on the first step). Order follows adj[cur].
inline std::vector<double> transition_weights(const RegionGraph& g, int prev, int cur, double p, double q) {
  const auto& nb = g.adj[static_cast<std::size_t>(cur)];
  std::vector<double> w(nb.size(), 1.0);
  if (prev < 0) return w;
  for (std::size_t i = 0; i < nb.size(); ++i) {
    if (nb[i] == prev)
      w[i] = 1.0 / p;
    else if (g.has_edge(nb[i], prev))
      w[i] = 1.0;
    else
      w[i] = 1.0 / q;
  }
  return w;
}

inline std::vector<double> transition_probabilities(const RegionGraph& g, int prev, int cur, double p, double q) {
  auto w = transition_weights(g, prev, cur, p, q);
  double s = 0.0;
  for (double v : w) s += v;
  for (auto& v : w) v /= s;
  return w;
}

// walks_per_node rounds, each visiting every node once as a start (node order shuffled per round).
inline std::vector<std::vector<int>> random_walks(const RegionGraph& g, const Node2VecConfig& cfg) {
  std::mt19937_64 gen(rng::mix(cfg.seed, 0x3a1c));
  std::vector<std::vector<int>> walks;
  std::vector<std::size_t> order(g.nodes);
  for (std::size_t i = 0; i < g.nodes; ++i) order[i] = i;
  for (std::size_t r = 0; r < cfg.walks_per_node; ++r) {
    for (std::size_t i = g.nodes; i > 1; --i) std::swap(order[i - 1], order[gen() % i]);
    for (auto start : order) {
      std::vector<int> walk{static_cast<int>(start)};
      if (g.adj[start].empty()) {
        walks.push_back(std::move(walk));
        continue;
      }
      while (walk.size() < cfg.walk_length) {
        const int cur = walk.back();
        const int prev = walk.size() > 1 ? walk[walk.size() - 2] : -1;
        const auto w = transition_weights(g, prev, cur, cfg.p, cfg.q);
        double total = 0.0;
        for (double v : w) total += v;
        double u = rng::uniform01(gen) * total;
        std::size_t pick = 0;
        for (; pick + 1 < w.size(); ++pick) {
          u -= w[pick];
          if (u < 0) break;
        }
        walk.push_back(g.adj[static_cast<std::size_t>(cur)][pick]);
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

struct EmbeddingTable {
  std::size_t dims = 0;
  std::vector<std::vector<double>> vectors;  // indexed by region id
  std::vector<bool> untrained;               // isolated nodes keep their initialization
  std::vector<double> epoch_loss;            // mean skip-gram loss per epoch

  double cosine(std::size_t a, std::size_t b) const {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < dims; ++i) {
      ab += vectors[a][i] * vectors[b][i];
      aa += vectors[a][i] * vectors[a][i];
      bb += vectors[b][i] * vectors[b][i];
    }
    return aa > 0 && bb > 0 ? ab / std::sqrt(aa * bb) : 0.0;
  }
};

// Skip-gram with negative sampling over node2vec walks, plain single-threaded SGD with a
// linearly decaying learning rate.
inline EmbeddingTable node2vec_embed(const RegionGraph& g, const Node2VecConfig& cfg = {}) {
  if (g.nodes == 0) throw std::invalid_argument("node2vec: empty graph");
  const auto walks = random_walks(g, cfg);
  const std::size_t n = g.nodes, d = cfg.dims;
  std::mt19937_64 gen(rng::mix(cfg.seed, 0x5c1b));

  EmbeddingTable t;
  t.dims = d;
  t.vectors.assign(n, std::vector<double>(d));
  for (auto& v : t.vectors)
    for (auto& x : v) x = (rng::uniform01(gen) - 0.5) / static_cast<double>(d);
  std::vector<std::vector<double>> ctx(n, std::vector<double>(d, 0.0));
  t.untrained.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) t.untrained[i] = g.adj[i].empty();

  // Negative table: unigram^0.75 over walk occurrences.
  std::vector<double> freq(n, 0.0);
  for (const auto& w : walks)
    for (int v : w) freq[static_cast<std::size_t>(v)] += 1.0;
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) cdf[i] = (acc += std::pow(freq[i], 0.75));

  auto sigmoid = [](double x) { return x > 30 ? 1.0 : x < -30 ? 0.0 : 1.0 / (1.0 + std::exp(-x)); };
  std::size_t total_pairs = 0;
  for (const auto& w : walks) total_pairs += w.size();
  const double total_steps = static_cast<double>(total_pairs) * cfg.epochs;
  double step = 0.0;
  std::vector<double> grad(d);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss = 0.0;
    std::size_t terms = 0;
    for (const auto& walk : walks) {
      for (std::size_t i = 0; i < walk.size(); ++i) {
        const double lr = cfg.lr * std::max(1e-4, 1.0 - step / total_steps);
        step += 1.0;
        auto& center = t.vectors[static_cast<std::size_t>(walk[i])];
        const std::size_t lo = i >= cfg.window ? i - cfg.window : 0;
        const std::size_t hi = std::min(walk.size() - 1, i + cfg.window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const int context = walk[j];
          std::fill(grad.begin(), grad.end(), 0.0);
          for (std::size_t s = 0; s <= cfg.negatives; ++s) {
            int target;
            double label;
            if (s == 0) {
              target = context;
              label = 1.0;
            } else {
              const double u = rng::uniform01(gen) * acc;
              target = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
              target = std::min<int>(target, static_cast<int>(n) - 1);
              if (target == context) continue;
              label = 0.0;
            }
            auto& out = ctx[static_cast<std::size_t>(target)];
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += center[k] * out[k];
            const double sg = sigmoid(dot);
            loss += label > 0 ? -std::log(std::max(sg, 1e-12)) : -std::log(std::max(1.0 - sg, 1e-12));
            ++terms;
            const double coeff = (label - sg) * lr;
            for (std::size_t k = 0; k < d; ++k) {
              grad[k] += coeff * out[k];
              out[k] += coeff * center[k];
            }
          }
          for (std::size_t k = 0; k < d; ++k) center[k] += grad[k];
        }
      }
    }
    t.epoch_loss.push_back(terms ? loss / static_cast<double>(terms) : 0.0);
  }
  return t;
}

inline void write_embeddings_csv(std::ostream& out, const EmbeddingTable& t) {
  out << "region_id";
  for (std::size_t i = 0; i < t.dims; ++i) out << ",v" << i;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < t.vectors.size(); ++r) {
    out << r;
    for (double v : t.vectors[r]) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

inline EmbeddingTable read_embeddings_csv(std::istream& in) {
  EmbeddingTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("embeddings: empty file");
  t.dims = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::size_t pos = line.find(',');
    const auto id = std::stoul(line.substr(0, pos));
    while (pos != std::string::npos) {
      const auto next = line.find(',', pos + 1);
      v.push_back(std::stod(line.substr(pos + 1, next - pos - 1)));
      pos = next;
    }
    if (v.size() != t.dims) throw std::runtime_error("embeddings: ragged row");
    if (id >= t.vectors.size()) t.vectors.resize(id + 1);
    t.vectors[id] = std::move(v);
  }
  t.untrained.assign(t.vectors.size(), false);
  return t;
}

}  // namespace terracast
