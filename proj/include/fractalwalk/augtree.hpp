#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fractalwalk/common.hpp"
#include "fractalwalk/ifs.hpp"

namespace fractalwalk {

/// The augmented tree of an IFS up to a finite level: the modified word tree
/// plus horizontal edges joining same-level words whose cells come within
/// gamma * r^n of each other.
///
/// Vertex ids are level-major and lexicographic within each level, so level n
/// occupies the contiguous range [level_begin[n], level_begin[n+1]).
struct AugmentedTree {
  IfsSystem ifs;
  double gamma = 0.0;
  int max_level = 0;

  std::vector<std::vector<std::uint8_t>> word;
  std::vector<int> level;
  std::vector<int> parent;  // -1 for the root
  std::vector<double> rprod;
  std::vector<std::vector<int>> children;
  std::vector<std::vector<int>> horizontal;
  std::vector<int> level_begin;

  int vertex_count() const { return static_cast<int>(word.size()); }
  int level_first(int n) const { return level_begin[static_cast<std::size_t>(n)]; }
  int level_size(int n) const {
    return level_begin[static_cast<std::size_t>(n) + 1] -
           level_begin[static_cast<std::size_t>(n)];
  }
  /// |X_n| = number of vertices with level <= n.
  int count_up_to(int n) const {
    return level_begin[static_cast<std::size_t>(n) + 1];
  }

  int degree(int v) const {
    return (parent[v] >= 0 ? 1 : 0) + static_cast<int>(children[v].size()) +
           static_cast<int>(horizontal[v].size());
  }

  int ancestor_at(int v, int j) const {
    while (level[v] > j) v = parent[v];
    return v;
  }

  AffineMap word_map(int v) const { return ifs.map_of_word(word[v]); }

  /// Representative interior point of the cell of v.
  Vec projection(int v) const { return ifs.apply_word(word[v], ifs.interior_point); }

  /// Vertex id of a word, or -1. Levels are lexicographically sorted.
  int find(const std::vector<std::uint8_t>& symbols) const {
    for (int n = 0; n <= max_level; ++n) {
      const int lo = level_first(n), hi = count_up_to(n);
      auto it = std::lower_bound(word.begin() + lo, word.begin() + hi, symbols,
                                 lex_less);
      if (it != word.begin() + hi && *it == symbols)
        return static_cast<int>(it - word.begin());
    }
    return -1;
  }

  long horizontal_edge_count(int n) const {
    long c = 0;
    for (int v = level_first(n); v < count_up_to(n); ++v)
      c += static_cast<long>(horizontal[v].size());
    return c / 2;
  }

  /// Pre-augmented-tree law: a horizontal edge forces equal or horizontally
  /// adjacent parents. Returns the number of violations (0 on a sound build).
  long parent_law_violations() const {
    long bad = 0;
    for (int x = 0; x < vertex_count(); ++x)
      for (int y : horizontal[x]) {
        if (level[x] != level[y] || x == y) {
          ++bad;
          continue;
        }
        if (x < y) {
          const int px = parent[x], py = parent[y];
          if (px != py &&
              !std::binary_search(horizontal[px].begin(), horizontal[px].end(), py))
            ++bad;
        }
      }
    return bad;
  }
};

/// Applies f to each neighbor of v in X_cap_level.
template <typename F>
inline void for_neighbors(const AugmentedTree& t, int v, int cap_level, F&& f) {
  if (t.parent[v] >= 0) f(t.parent[v]);
  if (t.level[v] < cap_level)
    for (int c : t.children[v]) f(c);
  for (int u : t.horizontal[v]) f(u);
}

struct BuildOptions {
  double gamma = -1.0;  // < 0 means the default 0.1 * diameter
  int max_level = 6;
  std::size_t max_cloud_points = 400000;  // escalation cap per decision cloud
  bool exhaustive_pairs = false;          // test mode: no candidate pruning
};

namespace detail {

struct Box {
  Vec c, hw;  // center, halfwidths
};

inline Box image_box(const AffineMap& m, const Box& root) {
  return {m.linear * root.c + m.offset, m.linear.cwiseAbs() * root.hw};
}

inline double box_gap(const Box& a, const Box& b) {
  double s = 0.0;
  for (int i = 0; i < a.c.size(); ++i) {
    const double g = std::abs(a.c(i) - b.c(i)) - a.hw(i) - b.hw(i);
    if (g > 0.0) s += g * g;
  }
  return std::sqrt(s);
}

// Minimum distance between two point sets, restricted to pairs within
// radius R. Returns +inf if no pair is that close. Short-circuits as soon as
// a pair at distance <= accept_below is seen.
inline double min_dist_within(const std::vector<Vec>& a, const std::vector<Vec>& b,
                              double R, double accept_below) {
  double best = std::numeric_limits<double>::infinity();
  if (a.size() * b.size() <= 65536) {
    for (const Vec& p : a)
      for (const Vec& q : b) {
        const double d = (p - q).norm();
        if (d < best) {
          best = d;
          if (best <= accept_below) return best;
        }
      }
    return best;
  }
  // Hash-grid radius search with cell size R.
  const int d = static_cast<int>(a[0].size());
  auto key_of = [&](const Vec& p) {
    std::uint64_t h = 0;
    for (int i = 0; i < d; ++i) {
      const auto cell = static_cast<std::int64_t>(std::floor(p(i) / R));
      h = SplitMix64::mix(h ^ static_cast<std::uint64_t>(cell));
    }
    return h;
  };
  std::unordered_map<std::uint64_t, std::vector<int>> grid;
  grid.reserve(b.size() * 2);
  for (int j = 0; j < static_cast<int>(b.size()); ++j)
    grid[key_of(b[j])].push_back(j);
  std::vector<std::int64_t> cell(d), probe(d);
  for (const Vec& p : a) {
    for (int i = 0; i < d; ++i)
      cell[i] = static_cast<std::int64_t>(std::floor(p(i) / R));
    const long combos = static_cast<long>(std::pow(3.0, d));
    for (long c = 0; c < combos; ++c) {
      long t = c;
      std::uint64_t h = 0;
      for (int i = 0; i < d; ++i) {
        probe[i] = cell[i] + (t % 3) - 1;
        t /= 3;
        h = SplitMix64::mix(h ^ static_cast<std::uint64_t>(probe[i]));
      }
      auto it = grid.find(h);
      if (it == grid.end()) continue;
      for (int j : it->second) {
        const double dist = (p - b[j]).norm();
        if (dist < best) {
          best = dist;
          if (best <= accept_below) return best;
        }
      }
    }
  }
  return best;
}

}  // namespace detail

/// Builds the augmented tree level by level.
///
/// Every horizontal-edge decision is certified: the cloud distance d_hat is an
/// upper bound on the true cell distance D (cloud points lie inside the
/// cells), so d_hat <= theta accepts; and D >= d_hat - e with covering error
/// e, so d_hat - e > theta rejects. Undecided pairs escalate the cloud depth.
inline AugmentedTree build_augmented_tree(const IfsSystem& ifs,
                                          const BuildOptions& opt = {}) {
  if (opt.max_level < 0) throw ConfigError("max_level must be >= 0");
  AugmentedTree t;
  t.ifs = ifs;
  t.gamma = opt.gamma < 0.0 ? 0.1 * ifs.diameter : opt.gamma;
  if (!(t.gamma > 0.0)) throw ConfigError("gamma must be positive");
  t.max_level = opt.max_level;

  t.word.push_back({});
  t.level.push_back(0);
  t.parent.push_back(-1);
  t.rprod.push_back(1.0);
  t.children.emplace_back();
  t.horizontal.emplace_back();
  t.level_begin = {0, 1};

  const detail::Box root_box{0.5 * (ifs.box_lo + ifs.box_hi),
                             0.5 * (ifs.box_hi - ifs.box_lo)};
  std::vector<std::vector<Vec>> base_cloud;  // per depth q
  auto cloud_at = [&](int q) -> const std::vector<Vec>& {
    while (static_cast<int>(base_cloud.size()) <= q)
      base_cloud.push_back(
          detail::base_decision_cloud(ifs, static_cast<int>(base_cloud.size())));
    return base_cloud[static_cast<std::size_t>(q)];
  };

  for (int n = 1; n <= opt.max_level; ++n) {
    // Vertices of level n, extending parents in id order keeps them sorted.
    const int pfirst = t.level_first(n - 1), plast = t.count_up_to(n - 1);
    for (int p = pfirst; p < plast; ++p) {
      std::vector<std::uint8_t> sym = t.word[p];
      detail::extend_word(ifs, sym, t.rprod[p], n,
                          [&](const std::vector<std::uint8_t>& s, double v) {
                            const int id = t.vertex_count();
                            t.word.push_back(s);
                            t.level.push_back(n);
                            t.parent.push_back(p);
                            t.rprod.push_back(v);
                            t.children.emplace_back();
                            t.horizontal.emplace_back();
                            t.children[p].push_back(id);
                          });
    }
    t.level_begin.push_back(t.vertex_count());

    const int first = t.level_first(n), last = t.count_up_to(n);
    std::vector<AffineMap> maps(static_cast<std::size_t>(last - first));
    std::vector<detail::Box> boxes(maps.size());
    for (int v = first; v < last; ++v) {
      maps[v - first] = t.word_map(v);
      boxes[v - first] = detail::image_box(maps[v - first], root_box);
    }

    const double theta = t.gamma * ifs.r_pow[static_cast<std::size_t>(n)];
    auto decide = [&](int x, int y) -> bool {
      if (detail::box_gap(boxes[x - first], boxes[y - first]) > theta)
        return false;
      for (int q = 0;; ++q) {
        const auto& base = cloud_at(q);
        if (base.size() > opt.max_cloud_points)
          throw UndecidableEdgeError(
              "cell pair " + Word{t.word[x]}.str() + "," + Word{t.word[y]}.str() +
              " undecidable at cloud cap; gamma sits on a decision boundary, "
              "try a different gamma");
        std::vector<Vec> ca(base.size()), cb(base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
          ca[i] = maps[x - first].apply(base[i]);
          cb[i] = maps[y - first].apply(base[i]);
        }
        const double e = (t.rprod[x] + t.rprod[y]) *
                         ifs.r_pow[static_cast<std::size_t>(q)] * ifs.diameter;
        const double m = detail::min_dist_within(ca, cb, theta + e, theta);
        if (m <= theta) return true;
        if (m > theta + e) return false;
      }
    };

    auto try_edge = [&](int x, int y) {
      if (decide(x, y)) {
        t.horizontal[x].push_back(y);
        t.horizontal[y].push_back(x);
      }
    };

    if (opt.exhaustive_pairs) {
      for (int x = first; x < last; ++x)
        for (int y = x + 1; y < last; ++y) try_edge(x, y);
    } else {
      // Candidates: children of one parent, or of horizontally adjacent
      // parents. Sound because cell distance is monotone under parents.
      for (int p = pfirst; p < plast; ++p) {
        const auto& cs = t.children[p];
        for (std::size_t i = 0; i < cs.size(); ++i)
          for (std::size_t j = i + 1; j < cs.size(); ++j) try_edge(cs[i], cs[j]);
        for (int qp : t.horizontal[p]) {
          if (qp < p) continue;
          for (int cx : cs)
            for (int cy : t.children[qp]) try_edge(cx, cy);
        }
      }
    }
    for (int v = first; v < last; ++v)
      std::sort(t.horizontal[v].begin(), t.horizontal[v].end());
  }

  if (t.parent_law_violations() != 0)
    throw NumericError("horizontal edges violate the parent law");
  return t;
}

struct DegreeStats {
  int max_degree = 0;
  std::map<int, long> histogram;
};

inline DegreeStats degree_stats(const AugmentedTree& t) {
  DegreeStats s;
  for (int v = 0; v < t.vertex_count(); ++v) {
    const int d = t.degree(v);
    s.max_degree = std::max(s.max_degree, d);
    ++s.histogram[d];
  }
  return s;
}

// ---------------------------------------------------------------------------
// Exact combinatorial adjacency oracles for two built-ins, used to
// cross-validate the geometric builder.

/// Dyadic interval cells k and k' at level n touch iff |k - k'| = 1.
inline std::vector<std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>>
interval_horizontal_oracle(int n) {
  std::vector<std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>> out;
  auto word_of = [&](long k) {
    std::vector<std::uint8_t> w(static_cast<std::size_t>(n));
    for (int i = n - 1; i >= 0; --i) {
      w[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((k & 1) + 1);
      k >>= 1;
    }
    return w;
  };
  for (long k = 0; k + 1 < (1L << n); ++k)
    out.emplace_back(word_of(k), word_of(k + 1));
  return out;
}

/// Gasket cells of equal length touch iff the words are w·i·j^m and w·j·i^m
/// for distinct symbols i, j (the shared point is a cell vertex).
inline std::vector<std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>>
gasket_horizontal_oracle(int d, int n) {
  const int N = d + 1;
  std::vector<std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>> out;
  std::vector<std::uint8_t> w;
  auto emit_for_prefix = [&](const std::vector<std::uint8_t>& prefix) {
    const int m = n - static_cast<int>(prefix.size()) - 1;
    for (std::uint8_t i = 1; i <= N; ++i)
      for (std::uint8_t j = static_cast<std::uint8_t>(i + 1); j <= N; ++j) {
        auto a = prefix, b = prefix;
        a.push_back(i);
        b.push_back(j);
        a.insert(a.end(), static_cast<std::size_t>(m), j);
        b.insert(b.end(), static_cast<std::size_t>(m), i);
        out.emplace_back(std::move(a), std::move(b));
      }
  };
  std::function<void(int)> rec = [&](int len) {
    if (len < n) emit_for_prefix(w);
    if (len + 1 >= n) return;
    for (std::uint8_t i = 1; i <= N; ++i) {
      w.push_back(i);
      rec(len + 1);
      w.pop_back();
    }
  };
  rec(0);
  return out;
}

}  // namespace fractalwalk
