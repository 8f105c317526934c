#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "terracast/events.hpp"
#include "terracast/synthgen.hpp"

namespace terracast {

// Up to three coordinates; `dim` says how many are live.
struct ClusterPoint {
  std::array<double, 3> v{};
};

inline double sq_dist(const ClusterPoint& a, const ClusterPoint& b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) s += (a.v[i] - b.v[i]) * (a.v[i] - b.v[i]);
  return s;
}

inline constexpr double kElevationScale = 1.0 / 1000.0;  // metres -> commensurate with degrees

// (lat, lon) or (lat, lon, elev/1000) per event.
inline std::vector<ClusterPoint> cluster_points(std::span<const ConflictEvent> events, bool with_elevation) {
  std::vector<ClusterPoint> out;
  for (const auto& e : events) {
    ClusterPoint p{{e.location.lat, e.location.lon, 0.0}};
    if (with_elevation) p.v[2] = e.location.elev.value_or(0.0) * kElevationScale;
    out.push_back(p);
  }
  return out;
}

struct ClusterModel {
  std::size_t k = 0;
  std::size_t dim = 2;
  std::vector<ClusterPoint> centroids;
  std::vector<int> assignments;     // per input point
  double sse = 0.0;
  std::vector<double> sse_history;  // after each assignment step
  int iterations = 0;

  int nearest(const ClusterPoint& p) const {
    int best = 0;
    double bd = 1e300;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = sq_dist(p, centroids[c], dim);
      if (d < bd) bd = d, best = static_cast<int>(c);
    }
    return best;
  }
};

struct KMeansOptions {
  int max_iter = 300;
  double tol = 1e-6;
  int n_init = 10;  // k-means++ restarts; the lowest SSE wins
};

namespace detail {

inline std::vector<ClusterPoint> kmeanspp_seed(std::span<const ClusterPoint> pts, std::size_t k, std::size_t dim,
                                               std::mt19937_64& g) {
  std::vector<ClusterPoint> c;
  c.push_back(pts[g() % pts.size()]);
  std::vector<double> d2(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) d2[i] = sq_dist(pts[i], c[0], dim);
  while (c.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = 0;
    if (total <= 0) {
      pick = g() % pts.size();
    } else {
      double u = rng::uniform01(g) * total;
      for (pick = 0; pick + 1 < pts.size(); ++pick) {
        u -= d2[pick];
        if (u < 0) break;
      }
    }
    c.push_back(pts[pick]);
    for (std::size_t i = 0; i < pts.size(); ++i) d2[i] = std::min(d2[i], sq_dist(pts[i], c.back(), dim));
  }
  return c;
}

// Single-point moves that strictly lower SSE (Hartigan's rule), with centroids kept as exact means.
// Escapes Lloyd fixed points that are not local optima under reassignment of one point.
inline void hartigan_refine(std::span<const ClusterPoint> pts, ClusterModel& m, std::size_t dim) {
  std::vector<ClusterPoint> sum(m.k);
  std::vector<std::size_t> count(m.k, 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    m.assignments[i] = m.nearest(pts[i]);
    const auto a = static_cast<std::size_t>(m.assignments[i]);
    for (std::size_t d = 0; d < dim; ++d) sum[a].v[d] += pts[i].v[d];
    ++count[a];
  }
  auto refresh = [&](std::size_t c) {
    if (count[c] == 0) return;
    for (std::size_t d = 0; d < dim; ++d) m.centroids[c].v[d] = sum[c].v[d] / static_cast<double>(count[c]);
  };
  for (std::size_t c = 0; c < m.k; ++c) refresh(c);
  for (bool moved = true; moved;) {
    moved = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto a = static_cast<std::size_t>(m.assignments[i]);
      if (count[a] < 2) continue;
      const double na = static_cast<double>(count[a]);
      const double remove = na / (na - 1) * sq_dist(pts[i], m.centroids[a], dim);
      std::size_t to = a;
      double add = remove;
      for (std::size_t b = 0; b < m.k; ++b) {
        if (b == a) continue;
        const double nb = static_cast<double>(count[b]);
        const double cost = nb / (nb + 1) * sq_dist(pts[i], m.centroids[b], dim);
        if (cost < add) add = cost, to = b;
      }
      if (to == a || add >= remove * (1 - 1e-12)) continue;
      for (std::size_t d = 0; d < dim; ++d) sum[a].v[d] -= pts[i].v[d], sum[to].v[d] += pts[i].v[d];
      --count[a];
      ++count[to];
      m.assignments[i] = static_cast<int>(to);
      refresh(a);
      refresh(to);
      moved = true;
    }
  }
}

// Lloyd iterations from given centroids.
inline ClusterModel lloyd(std::span<const ClusterPoint> pts, std::vector<ClusterPoint> centroids, std::size_t dim,
                         const KMeansOptions& opt) {
  ClusterModel m;
  m.k = centroids.size();
  m.dim = dim;
  m.centroids = std::move(centroids);
  m.assignments.assign(pts.size(), 0);
  for (int it = 0; it < opt.max_iter; ++it) {
    double sse = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      m.assignments[i] = m.nearest(pts[i]);
      sse += sq_dist(pts[i], m.centroids[static_cast<std::size_t>(m.assignments[i])], dim);
    }
    m.sse_history.push_back(sse);
    m.sse = sse;
    ++m.iterations;
    std::vector<ClusterPoint> next(m.k);
    std::vector<std::size_t> count(m.k, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      auto& c = next[static_cast<std::size_t>(m.assignments[i])];
      for (std::size_t d = 0; d < dim; ++d) c.v[d] += pts[i].v[d];
      ++count[static_cast<std::size_t>(m.assignments[i])];
    }
    for (std::size_t c = 0; c < m.k; ++c) {
      if (count[c] == 0) {
        // Empty cluster: move it onto the point currently farthest from its centroid.
        std::size_t far = 0;
        double fd = -1.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const double d = sq_dist(pts[i], m.centroids[static_cast<std::size_t>(m.assignments[i])], dim);
          if (d > fd) fd = d, far = i;
        }
        next[c] = pts[far];
        m.assignments[far] = static_cast<int>(c);
        continue;
      }
      for (std::size_t d = 0; d < dim; ++d) next[c].v[d] /= static_cast<double>(count[c]);
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < m.k; ++c) shift = std::max(shift, sq_dist(next[c], m.centroids[c], dim));
    m.centroids = std::move(next);
    if (std::sqrt(shift) <= opt.tol) break;
  }
  hartigan_refine(pts, m, dim);
  // Final assignment against the settled centroids.
  double sse = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    m.assignments[i] = m.nearest(pts[i]);
    sse += sq_dist(pts[i], m.centroids[static_cast<std::size_t>(m.assignments[i])], dim);
  }
  m.sse_history.push_back(sse);
  m.sse = sse;
  return m;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding.
inline ClusterModel kmeans(std::span<const ClusterPoint> pts, std::size_t k, std::uint64_t seed, std::size_t dim = 2,
                           const KMeansOptions& opt = {}) {
  if (dim < 2 || dim > 3) throw std::invalid_argument("kmeans: dimension must be 2 or 3");
  if (k == 0 || k > pts.size()) throw std::invalid_argument("kmeans: need 1 <= k <= number of points");
  ClusterModel best;
  for (int r = 0; r < std::max(1, opt.n_init); ++r) {
    std::mt19937_64 g(rng::mix(seed, 0xc1u + static_cast<std::uint64_t>(r)));
    auto m = detail::lloyd(pts, detail::kmeanspp_seed(pts, k, dim, g), dim, opt);
    if (r == 0 || m.sse < best.sse) best = std::move(m);
  }
  return best;
}

struct ElbowPoint {
  std::size_t k;
  double sse;
};

// SSE per k: best of five seeds, plus a warm start from the previous k's solution with one
// centroid added at the farthest point, which keeps the curve non-increasing.
inline std::vector<ElbowPoint> elbow_curve(std::span<const ClusterPoint> pts, std::span<const std::size_t> k_range,
                                           std::uint64_t seed = 0, std::size_t dim = 2) {
  for (std::size_t i = 1; i < k_range.size(); ++i)
    if (k_range[i] <= k_range[i - 1]) throw std::invalid_argument("elbow_curve: k_range must ascend");
  std::vector<ElbowPoint> out;
  KMeansOptions one;
  one.n_init = 1;
  ClusterModel prev;
  for (std::size_t k : k_range) {
    if (k > pts.size()) break;
    ClusterModel best;
    for (std::uint64_t s = 0; s < 5; ++s) {
      auto m = kmeans(pts, k, rng::mix(seed, s), dim, one);
      if (s == 0 || m.sse < best.sse) best = std::move(m);
    }
    if (!prev.centroids.empty() && prev.k < k) {
      auto init = prev.centroids;
      std::vector<double> d2(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i)
        d2[i] = sq_dist(pts[i], prev.centroids[static_cast<std::size_t>(prev.assignments[i])], dim);
      while (init.size() < k) {
        const auto far = static_cast<std::size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
        init.push_back(pts[far]);
        for (std::size_t i = 0; i < pts.size(); ++i) d2[i] = std::min(d2[i], sq_dist(pts[i], pts[far], dim));
      }
      auto warm = detail::lloyd(pts, std::move(init), dim, one);
      if (warm.sse < best.sse) best = std::move(warm);
    }
    out.push_back({k, best.sse});
    prev = std::move(best);
  }
  return out;
}

struct NwaRow {
  int region_id = 0;
  TimePeriod period;
  std::int64_t count = 0;
};

// One row per (cluster, month) over `span`, zero rows included. Events outside the span are ignored.
inline std::vector<NwaRow> build_nwa(std::span<const ConflictEvent> events, const ClusterModel& model,
                                     std::span<const TimePeriod> span) {
  std::map<int, std::size_t> month_pos;
  for (std::size_t i = 0; i < span.size(); ++i) month_pos[span[i].index()] = i;
  std::vector<NwaRow> rows;
  for (std::size_t r = 0; r < model.k; ++r)
    for (const auto& t : span) rows.push_back({static_cast<int>(r), t, 0});
  const bool elev = model.dim == 3;
  for (const auto& e : events) {
    auto it = month_pos.find(e.period.index());
    if (it == month_pos.end()) continue;
    ClusterPoint p{{e.location.lat, e.location.lon, elev ? e.location.elev.value_or(0.0) * kElevationScale : 0.0}};
    const auto region = static_cast<std::size_t>(model.nearest(p));
    ++rows[region * span.size() + it->second].count;
  }
  return rows;
}

inline double zero_fraction(std::span<const NwaRow> rows) {
  if (rows.empty()) return 0.0;
  return static_cast<double>(std::count_if(rows.begin(), rows.end(), [](const NwaRow& r) { return r.count == 0; })) /
         static_cast<double>(rows.size());
}

struct RegionGraph {
  std::size_t nodes = 0;
  std::vector<std::vector<int>> adj;  // sorted neighbour lists, unit weights

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& a : adj) n += a.size();
    return n / 2;
  }
  bool has_edge(int a, int b) const {
    const auto& l = adj[static_cast<std::size_t>(a)];
    return std::binary_search(l.begin(), l.end(), b);
  }
  std::size_t components() const {
    std::vector<int> seen(nodes, 0);
    std::size_t comps = 0;
    for (std::size_t s = 0; s < nodes; ++s) {
      if (seen[s]) continue;
      ++comps;
      std::vector<std::size_t> stack{s};
      seen[s] = 1;
      while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (int w : adj[v])
          if (!seen[static_cast<std::size_t>(w)]) seen[static_cast<std::size_t>(w)] = 1, stack.push_back(static_cast<std::size_t>(w));
      }
    }
    return comps;
  }
};

inline RegionGraph graph_from_edges(std::size_t nodes, std::span<const std::pair<int, int>> edges) {
  RegionGraph g;
  g.nodes = nodes;
  g.adj.resize(nodes);
  for (auto [a, b] : edges) {
    if (a == b) continue;
    g.adj[static_cast<std::size_t>(a)].push_back(b);
    g.adj[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& l : g.adj) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return g;
}

// Edge (a,b) iff |c_a - c_b| <= 1.5 x median nearest-centroid distance.
inline RegionGraph adjacency_graph(std::span<const ClusterPoint> centroids, std::size_t dim = 2,
                                   double factor = 1.5) {
  const std::size_t k = centroids.size();
  if (k < 2) throw std::invalid_argument("adjacency_graph: need at least two centroids");
  std::vector<double> nn(k, 1e300);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      if (a != b) nn[a] = std::min(nn[a], std::sqrt(sq_dist(centroids[a], centroids[b], dim)));
  std::vector<double> s(nn);
  std::sort(s.begin(), s.end());
  const double median = k % 2 ? s[k / 2] : 0.5 * (s[k / 2 - 1] + s[k / 2]);
  const double thr = factor * median * (1 + 1e-12);
  std::vector<std::pair<int, int>> edges;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b)
      if (std::sqrt(sq_dist(centroids[a], centroids[b], dim)) <= thr)
        edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
  return graph_from_edges(k, edges);
}

inline RegionGraph adjacency_graph(const ClusterModel& m) { return adjacency_graph(m.centroids, m.dim); }

}  // namespace terracast
