#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fractalwalk/augtree.hpp"
#include "fractalwalk/common.hpp"
#include "fractalwalk/manifest.hpp"

namespace fractalwalk {

/// BFS distances from src over X_cap_level; -1 marks unreached. Stops early
/// once `stop` is settled (if nonnegative).
inline std::vector<int> bfs_distances(const AugmentedTree& t, int src,
                                      int cap_level, int stop = -1) {
  std::vector<int> dist(static_cast<std::size_t>(t.count_up_to(cap_level)), -1);
  std::deque<int> queue{src};
  dist[static_cast<std::size_t>(src)] = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    if (v == stop) return dist;
    for_neighbors(t, v, cap_level, [&](int u) {
      if (dist[static_cast<std::size_t>(u)] < 0) {
        dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
        queue.push_back(u);
      }
    });
  }
  return dist;
}

/// Graph distance; geodesics never dip below the deeper endpoint, so the
/// search is confined to X_max(|x|,|y|).
inline int graph_distance(const AugmentedTree& t, int x, int y) {
  if (x == y) return 0;
  const int cap = std::max(t.level[x], t.level[y]);
  const auto dist = bfs_distances(t, x, cap, y);
  const int d = dist[static_cast<std::size_t>(y)];
  if (d < 0) throw NumericError("graph is not connected");
  return d;
}

/// Gromov product (x|y) = (|x| + |y| - d(x,y)) / 2 from the root.
inline Half gromov_product(const AugmentedTree& t, int x, int y) {
  return {t.level[x] + t.level[y] - graph_distance(t, x, y)};
}

/// Geodesic of vertical-horizontal-vertical shape whose horizontal segment
/// sits at the smallest possible level ell; then (x|y) = ell - h/2.
struct CanonicalGeodesic {
  std::vector<int> path;
  int u = -1, v = -1;  // endpoints of the horizontal segment
  int ell = 0;         // level of the horizontal segment
  int h = 0;           // d(u,v)
  Half product() const { return {2 * ell - h}; }
};

namespace detail {

// BFS inside one level using horizontal edges only, with a depth cap;
// records parents for path reconstruction.
inline bool horizontal_path(const AugmentedTree& t, int from, int to, int depth_cap,
                            std::vector<int>* path_out) {
  if (from == to) {
    if (path_out) *path_out = {from};
    return depth_cap >= 0;
  }
  if (depth_cap <= 0) return false;
  std::unordered_map<int, int> par;
  std::deque<std::pair<int, int>> queue{{from, 0}};
  par[from] = from;
  while (!queue.empty()) {
    auto [v, d] = queue.front();
    queue.pop_front();
    if (d == depth_cap) continue;
    for (int u : t.horizontal[v]) {
      if (par.count(u)) continue;
      par[u] = v;
      if (u == to) {
        if (path_out) {
          std::vector<int> rev{u};
          while (rev.back() != from) rev.push_back(par[rev.back()]);
          path_out->assign(rev.rbegin(), rev.rend());
        }
        return d + 1 <= depth_cap;
      }
      queue.emplace_back(u, d + 1);
    }
  }
  return false;
}

}  // namespace detail

/// Exact horizontal-only distance within one level (or -1 if not connected
/// horizontally within the depth cap).
inline int horizontal_distance(const AugmentedTree& t, int x, int y, int depth_cap) {
  std::vector<int> path;
  if (detail::horizontal_path(t, x, y, depth_cap, &path))
    return static_cast<int>(path.size()) - 1;
  return -1;
}

inline CanonicalGeodesic canonical_geodesic(const AugmentedTree& t, int x, int y) {
  CanonicalGeodesic g;
  if (x == y) {
    g.path = {x};
    g.u = g.v = x;
    g.ell = t.level[x];
    g.h = 0;
    return g;
  }
  const int d = graph_distance(t, x, y);
  const int gp2 = t.level[x] + t.level[y] - d;
  const int jmin = (gp2 + 1) / 2;
  for (int j = jmin; j <= std::min(t.level[x], t.level[y]); ++j) {
    const int ax = t.ancestor_at(x, j), ay = t.ancestor_at(y, j);
    const int h = 2 * j - gp2;
    std::vector<int> hpath;
    if (!detail::horizontal_path(t, ax, ay, h, &hpath)) continue;
    if (static_cast<int>(hpath.size()) - 1 != h) continue;
    for (int v = x; v != ax; v = t.parent[v]) g.path.push_back(v);
    g.path.insert(g.path.end(), hpath.begin(), hpath.end());
    std::vector<int> down;
    for (int v = y; v != ay; v = t.parent[v]) down.push_back(v);
    g.path.insert(g.path.end(), down.rbegin(), down.rend());
    g.u = ax;
    g.v = ay;
    g.ell = j;
    g.h = h;
    if (static_cast<int>(g.path.size()) - 1 != d)
      throw NumericError("canonical geodesic has wrong length");
    return g;
  }
  throw NumericError("no vertical-horizontal-vertical geodesic found");
}

/// Maximal length of a purely horizontal geodesic, the hyperbolicity witness.
/// Levels larger than `level_size_cap` vertices are skipped.
inline int horizontal_geodesic_bound(const AugmentedTree& t,
                                     int scan_max_level = 1 << 20,
                                     int level_size_cap = 20000) {
  int M = 0;
  for (int n = 1; n <= std::min(t.max_level, scan_max_level); ++n) {
    if (t.level_size(n) > level_size_cap) continue;
    for (int x = t.level_first(n); x < t.count_up_to(n); ++x) {
      const auto dist = bfs_distances(t, x, n);
      // Horizontal-only BFS from x.
      std::vector<int> hdist(static_cast<std::size_t>(t.count_up_to(n)), -1);
      std::deque<int> queue{x};
      hdist[static_cast<std::size_t>(x)] = 0;
      while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int u : t.horizontal[v])
          if (hdist[static_cast<std::size_t>(u)] < 0) {
            hdist[static_cast<std::size_t>(u)] =
                hdist[static_cast<std::size_t>(v)] + 1;
            queue.push_back(u);
          }
      }
      for (int y = t.level_first(n); y < t.count_up_to(n); ++y) {
        const int h = hdist[static_cast<std::size_t>(y)];
        if (h > 0 && h == dist[static_cast<std::size_t>(y)]) M = std::max(M, h);
      }
    }
  }
  return M;
}

namespace detail {

inline int triple_violation2(int lx, int ly, int lz, int dxy, int dxz, int dzy) {
  const int pxy = lx + ly - dxy;
  const int pxz = lx + lz - dxz;
  const int pzy = lz + ly - dzy;
  return std::min(pxz, pzy) - pxy;
}

}  // namespace detail

/// Sampled lower bound on the hyperbolicity constant:
/// max over triples of min{(x|z),(z|y)} - (x|y). Deterministic per seed.
inline Half delta_estimate(const AugmentedTree& t, long sample_size,
                           std::uint64_t seed) {
  if (sample_size < 1) throw std::invalid_argument("sample_size must be >= 1");
  const int nv = t.vertex_count();
  long pool_size = 3;
  while (pool_size * (pool_size - 1) * (pool_size - 2) / 6 < sample_size &&
         pool_size < nv)
    ++pool_size;
  pool_size = std::min<long>(pool_size + 2, nv);

  SplitMix64 rng = SplitMix64::stream(seed, 0);
  std::set<int> pool_set;
  while (static_cast<long>(pool_set.size()) < pool_size)
    pool_set.insert(static_cast<int>(rng.below(static_cast<std::uint64_t>(nv))));
  const std::vector<int> pool(pool_set.begin(), pool_set.end());

  std::vector<std::vector<int>> dist(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    dist[i] = bfs_distances(t, pool[i], t.max_level);
  std::vector<int> index_of(static_cast<std::size_t>(nv), -1);
  for (std::size_t i = 0; i < pool.size(); ++i)
    index_of[static_cast<std::size_t>(pool[i])] = static_cast<int>(i);

  int worst2 = 0;
  for (long s = 0; s < sample_size; ++s) {
    int i = static_cast<int>(rng.below(pool.size()));
    int j = static_cast<int>(rng.below(pool.size()));
    int k = static_cast<int>(rng.below(pool.size()));
    if (i == j || j == k || i == k) continue;
    const int x = pool[static_cast<std::size_t>(i)],
              y = pool[static_cast<std::size_t>(j)],
              z = pool[static_cast<std::size_t>(k)];
    worst2 = std::max(
        worst2, detail::triple_violation2(
                    t.level[x], t.level[y], t.level[z],
                    dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(y)],
                    dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(z)],
                    dist[static_cast<std::size_t>(k)][static_cast<std::size_t>(y)]));
  }
  return {worst2};
}

/// Exact hyperbolicity defect over all triples of X_cap_level.
inline Half delta_exhaustive(const AugmentedTree& t, int cap_level) {
  const int nv = t.count_up_to(cap_level);
  std::vector<std::vector<int>> dist(static_cast<std::size_t>(nv));
  for (int v = 0; v < nv; ++v)
    dist[static_cast<std::size_t>(v)] = bfs_distances(t, v, cap_level);
  int worst2 = 0;
  for (int x = 0; x < nv; ++x)
    for (int y = x; y < nv; ++y)
      for (int z = 0; z < nv; ++z) {
        if (z == x || z == y) continue;
        worst2 = std::max(
            worst2,
            detail::triple_violation2(
                t.level[x], t.level[y], t.level[z],
                dist[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)],
                dist[static_cast<std::size_t>(x)][static_cast<std::size_t>(z)],
                dist[static_cast<std::size_t>(z)][static_cast<std::size_t>(y)]));
      }
  return {worst2};
}

// ---------------------------------------------------------------------------
// Boundary points and boundary Gromov products.

/// An eventually periodic infinite word prefix.period^inf together with its
/// geometric image: the period map is a contraction, so the image is
/// S_prefix(fixed point of S_period), exact to machine precision.
struct BoundaryPoint {
  std::vector<std::uint8_t> prefix;
  std::vector<std::uint8_t> period;
  Vec point;

  std::uint8_t symbol_at(std::size_t i) const {
    if (i < prefix.size()) return prefix[i];
    return period[(i - prefix.size()) % period.size()];
  }
  std::string code() const {
    std::string s = Word{prefix}.str();
    if (s == "@") s.clear();
    s += "(" + Word{period}.str() + ")";
    return s;
  }
};

inline BoundaryPoint make_boundary_point(const IfsSystem& ifs,
                                         std::vector<std::uint8_t> prefix,
                                         std::vector<std::uint8_t> period) {
  if (period.empty()) throw std::invalid_argument("period must be nonempty");
  for (auto s : prefix)
    if (s < 1 || s > ifs.branch()) throw std::invalid_argument("bad symbol");
  for (auto s : period)
    if (s < 1 || s > ifs.branch()) throw std::invalid_argument("bad symbol");
  BoundaryPoint bp;
  bp.prefix = std::move(prefix);
  bp.period = std::move(period);
  const Vec anchor = ifs.map_of_word(bp.period).fixed_point();
  bp.point = ifs.apply_word(bp.prefix, anchor);
  return bp;
}

/// The level-n vertex of the prefix ray of an infinite word.
inline int ray_vertex(const AugmentedTree& t, const BoundaryPoint& bp, int n) {
  if (n > t.max_level) throw std::invalid_argument("ray level beyond max_level");
  int v = 0;
  while (t.level[v] < n) {
    const std::size_t len = t.word[v].size();
    int next = -1;
    for (int c : t.children[v]) {
      bool match = true;
      for (std::size_t i = len; i < t.word[c].size() && match; ++i)
        match = t.word[c][i] == bp.symbol_at(i);
      if (match) {
        next = c;
        break;
      }
    }
    if (next < 0) throw NumericError("infinite word leaves the tree");
    v = next;
  }
  return v;
}

/// (xi|z) for a boundary point and a vertex; the ray products stabilize from
/// level |z| on, which is asserted.
inline Half gromov_to_boundary(const AugmentedTree& t, const BoundaryPoint& xi,
                               int z) {
  const int k = std::max(t.level[z], 1);
  if (k + 1 > t.max_level)
    throw std::invalid_argument("tree too shallow for boundary product");
  const int xk = ray_vertex(t, xi, k);
  const int xk1 = ray_vertex(t, xi, k + 1);
  const Half a = gromov_product(t, xk, z);
  const Half b = gromov_product(t, xk1, z);
  if (!(a == b)) throw NumericError("ray product failed to stabilize at |z|");
  return a;
}

struct BoundaryGromov {
  Half product{0};
  bool stabilized = false;
  int level_used = 0;
  double geometric_distance = 0.0;
};

/// (xi|eta) along the prefix rays: accepted once two consecutive levels agree
/// with horizontal distance exceeding M. Pre: distinct geometric points.
inline BoundaryGromov try_boundary_gromov_product(const AugmentedTree& t,
                                                  const BoundaryPoint& xi,
                                                  const BoundaryPoint& eta,
                                                  int M) {
  BoundaryGromov out;
  out.geometric_distance = (xi.point - eta.point).norm();
  if (out.geometric_distance <= 1e-12 * std::max(1.0, t.ifs.diameter))
    throw std::invalid_argument(
        "boundary points must have distinct geometric images");
  int prev2 = std::numeric_limits<int>::min();
  for (int n = 1; n <= t.max_level; ++n) {
    const int xv = ray_vertex(t, xi, n), yv = ray_vertex(t, eta, n);
    const int d = graph_distance(t, xv, yv);
    const int p2 = 2 * n - d;
    if (p2 < prev2) throw NumericError("ray products are not monotone");
    if (n > 1 && p2 == prev2 && d > M) {
      out.product = {p2};
      out.stabilized = true;
      out.level_used = n;
      return out;
    }
    prev2 = p2;
    out.product = {p2};
    out.level_used = n;
  }
  return out;
}

inline BoundaryGromov boundary_gromov_product(const AugmentedTree& t,
                                              const BoundaryPoint& xi,
                                              const BoundaryPoint& eta, int M) {
  BoundaryGromov g = try_boundary_gromov_product(t, xi, eta, M);
  if (!g.stabilized)
    throw NumericError(
        "boundary Gromov product did not stabilize; build a deeper tree");
  return g;
}

// ---------------------------------------------------------------------------
// Boundary pair sampling and CSV emitters.

struct BoundaryPairSample {
  BoundaryPoint a, b;
  BoundaryGromov g;
};

/// Random eventually periodic boundary pairs with stabilized products. Pairs
/// share a random-length common prefix so the products spread over levels.
inline std::vector<BoundaryPairSample> sample_boundary_pairs(
    const AugmentedTree& t, int M, long count, std::uint64_t seed) {
  std::vector<BoundaryPairSample> out;
  SplitMix64 rng = SplitMix64::stream(seed, 1);
  const int N = t.ifs.branch();
  const long max_attempts = 60 * std::max(count, 1L);
  auto rand_sym = [&] { return static_cast<std::uint8_t>(1 + rng.below(N)); };
  for (long attempt = 0;
       attempt < max_attempts && static_cast<long>(out.size()) < count;
       ++attempt) {
    const int common_len = static_cast<int>(rng.below(std::max(1, t.max_level - 2)));
    std::vector<std::uint8_t> common;
    for (int i = 0; i < common_len; ++i) common.push_back(rand_sym());
    auto make_side = [&](std::uint8_t first) {
      std::vector<std::uint8_t> pre = common;
      pre.push_back(first);
      const int extra = static_cast<int>(rng.below(2));
      for (int i = 0; i < extra; ++i) pre.push_back(rand_sym());
      std::vector<std::uint8_t> per;
      const int plen = 1 + static_cast<int>(rng.below(2));
      for (int i = 0; i < plen; ++i) per.push_back(rand_sym());
      return make_boundary_point(t.ifs, pre, per);
    };
    const std::uint8_t s1 = rand_sym();
    std::uint8_t s2 = rand_sym();
    if (s1 == s2) s2 = static_cast<std::uint8_t>(1 + (s2 % N));
    BoundaryPoint a = make_side(s1), b = make_side(s2);
    if ((a.point - b.point).norm() <= 1e-9 * std::max(1.0, t.ifs.diameter))
      continue;
    auto g = try_boundary_gromov_product(t, a, b, M);
    if (!g.stabilized) continue;
    out.push_back({std::move(a), std::move(b), g});
  }
  return out;
}

/// Pairwise Gromov product table for one level.
inline std::string product_table_csv(const AugmentedTree& t, int n,
                                     const Manifest& manifest) {
  std::string s = manifest.comment_block("#");
  s += "x,y,distance,gromov_product\n";
  for (int x = t.level_first(n); x < t.count_up_to(n); ++x)
    for (int y = x + 1; y < t.count_up_to(n); ++y) {
      const int d = graph_distance(t, x, y);
      s += Word{t.word[x]}.str() + "," + Word{t.word[y]}.str() + "," +
           std::to_string(d) + "," + format_double(0.5 * (2 * n - d)) + "\n";
    }
  return s;
}

/// Scatter data for the Holder comparison of the Gromov metric with the
/// Euclidean metric on the attractor.
inline std::string holder_scatter_csv(const std::vector<BoundaryPairSample>& samples,
                                      const Manifest& manifest) {
  std::string s = manifest.comment_block("#");
  s += "a,b,gromov_product,geometric_distance,stabilized,level_used\n";
  for (const auto& ps : samples)
    s += ps.a.code() + "," + ps.b.code() + "," +
         format_double(ps.g.product.value()) + "," +
         format_double(ps.g.geometric_distance) + "," +
         (ps.g.stabilized ? "1" : "0") + "," + std::to_string(ps.g.level_used) +
         "\n";
  return s;
}

/// Least squares fit y = intercept + slope * x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  long n = 0;
};

inline LinearFit linear_fit(const std::vector<double>& xs,
                            const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("need at least two points to fit");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) throw std::invalid_argument("degenerate abscissa");
  LinearFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  f.n = static_cast<long>(xs.size());
  return f;
}

}  // namespace fractalwalk
