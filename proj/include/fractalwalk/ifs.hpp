#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fractalwalk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// One contractive similitude S(x) = ratio * Q * x + t with Q orthogonal.
struct Similitude {
  double ratio = 0.0;
  Mat orthogonal;   // d x d
  Vec translation;  // d

  Similitude() = default;
  Similitude(double r, Mat q, Vec t)
      : ratio(r), orthogonal(std::move(q)), translation(std::move(t)) {
    if (!(ratio > 0.0 && ratio < 1.0))
      throw std::invalid_argument("similitude ratio must lie in (0,1)");
    if (orthogonal.rows() != orthogonal.cols() ||
        orthogonal.rows() != translation.size())
      throw std::invalid_argument("similitude dimension mismatch");
    const Mat gram = orthogonal * orthogonal.transpose();
    if ((gram - Mat::Identity(dim(), dim())).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("similitude linear part is not orthogonal");
  }

  int dim() const { return static_cast<int>(translation.size()); }

  Vec apply(const Vec& x) const {
    return ratio * (orthogonal * x) + translation;
  }

  Vec fixed_point() const {
    const int d = dim();
    return (Mat::Identity(d, d) - ratio * orthogonal)
        .partialPivLu()
        .solve(translation);
  }
};

/// Affine map A x + t used for composed similitudes S_x.
struct AffineMap {
  Mat linear;
  Vec offset;
  double ratio = 1.0;

  static AffineMap identity(int d) {
    return {Mat::Identity(d, d), Vec::Zero(d), 1.0};
  }
  static AffineMap of(const Similitude& s) {
    return {s.ratio * s.orthogonal, s.translation, s.ratio};
  }
  AffineMap then_inner(const Similitude& s) const {
    // this ∘ s
    return {linear * (s.ratio * s.orthogonal), linear * s.translation + offset,
            ratio * s.ratio};
  }
  Vec apply(const Vec& x) const { return linear * x + offset; }
  Vec fixed_point() const {
    const int d = static_cast<int>(offset.size());
    return (Mat::Identity(d, d) - linear).partialPivLu().solve(offset);
  }
};

/// Solve sum_i ratios[i]^a = 1 for a by bisection.
inline double hausdorff_dim(const std::vector<double>& ratios) {
  if (ratios.size() < 2) throw std::invalid_argument("need at least two maps");
  double rmax = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0 && r < 1.0))
      throw std::invalid_argument("ratios must lie in (0,1)");
    rmax = std::max(rmax, r);
  }
  auto excess = [&](double a) {
    double s = 0.0;
    for (double r : ratios) s += std::pow(r, a);
    return s - 1.0;
  };
  double lo = 1e-6;
  double hi = std::log(static_cast<double>(ratios.size())) / -std::log(rmax) + 1.0;
  if (excess(lo) <= 0.0) throw std::runtime_error("dimension bracket failed at lower end");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  const double alpha = 0.5 * (lo + hi);
  if (std::abs(excess(alpha)) > 1e-12)
    throw std::runtime_error("dimension bisection did not converge");
  return alpha;
}

/// Probability weights {p_i} attached to the maps.
struct Weights {
  enum class Kind { natural, custom };
  std::vector<double> p;
  Kind kind = Kind::natural;

  static Weights custom(std::vector<double> probs) {
    Weights w;
    w.kind = Kind::custom;
    w.p = std::move(probs);
    double sum = 0.0;
    for (double v : w.p) {
      if (!(v > 0.0)) throw std::invalid_argument("weights must be positive");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("weights must sum to 1");
    return w;
  }
};

/// A finite index word with its contraction product and level.
///
/// The level n is defined by r_x <= r^n < r_(parent word); for a homogeneous
/// system it coincides with the word length.
struct Word {
  std::vector<std::uint8_t> symbols;  // 1-based symbols
  double ratio_product = 1.0;
  double weight_product = 1.0;
  int level = 0;

  bool root() const { return symbols.empty(); }
  std::string str() const {
    if (symbols.empty()) return "@";
    std::string s;
    for (auto c : symbols) s += static_cast<char>('0' + c);
    return s;
  }
};

inline bool lex_less(const std::vector<std::uint8_t>& a,
                     const std::vector<std::uint8_t>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

/// An IFS of contractive similitudes together with derived constants.
struct IfsSystem {
  std::vector<Similitude> maps;
  std::string name = "custom";
  int dim = 0;
  double alpha = 0.0;      // Hausdorff dimension assuming the open set condition
  double min_ratio = 0.0;  // r = min_i ratio_i
  bool homogeneous = false;
  double diameter = 0.0;   // certified upper bound on diam(K)
  Vec box_lo, box_hi;      // certified bounding box of K
  Vec interior_point;      // representative o of O ∩ K
  std::vector<Vec> fixed_points;
  std::vector<double> r_pow;  // r^0 .. r^kmax

  int branch() const { return static_cast<int>(maps.size()); }

  double natural_weight(int i) const {
    return homogeneous ? 1.0 / branch() : std::pow(maps[i].ratio, alpha);
  }

  /// True once a contraction product v has dropped to level n.
  bool reached(double v, int n) const {
    return v <= r_pow[static_cast<std::size_t>(n)] * (1.0 + 1e-12);
  }

  AffineMap map_of_word(const std::vector<std::uint8_t>& symbols) const {
    AffineMap m = AffineMap::identity(dim);
    for (auto s : symbols) m = m.then_inner(maps[s - 1]);
    return m;
  }

  Vec apply_word(const std::vector<std::uint8_t>& symbols, const Vec& x) const {
    Vec y = x;
    for (auto it = symbols.rbegin(); it != symbols.rend(); ++it)
      y = maps[*it - 1].apply(y);
    return y;
  }
};

namespace detail {

// Depth-first extension of one frontier word to the next level, in symbol
// order, which keeps each level lexicographically sorted.
template <typename Emit>
void extend_word(const IfsSystem& ifs, std::vector<std::uint8_t>& symbols,
                 double product, int target_level, Emit&& emit) {
  for (int i = 1; i <= ifs.branch(); ++i) {
    const double v = product * ifs.maps[i - 1].ratio;
    symbols.push_back(static_cast<std::uint8_t>(i));
    if (ifs.reached(v, target_level))
      emit(symbols, v);
    else
      extend_word(ifs, symbols, v, target_level, emit);
    symbols.pop_back();
  }
}

inline std::vector<Vec> seed_points(const IfsSystem& ifs) {
  return ifs.fixed_points;
}

}  // namespace detail

/// All of J_0 .. J_n as Word lists (natural weight products filled in).
inline std::vector<std::vector<Word>> frontier_levels(const IfsSystem& ifs,
                                                      int max_level) {
  std::vector<std::vector<Word>> levels(static_cast<std::size_t>(max_level) + 1);
  Word root;
  root.weight_product = 1.0;
  levels[0] = {root};
  for (int n = 1; n <= max_level; ++n) {
    for (const Word& w : levels[n - 1]) {
      std::vector<std::uint8_t> sym = w.symbols;
      const std::size_t base_len = sym.size();
      detail::extend_word(ifs, sym, w.ratio_product, n,
                          [&](const std::vector<std::uint8_t>& s, double v) {
                            Word child;
                            child.symbols = s;
                            child.ratio_product = v;
                            child.level = n;
                            child.weight_product = w.weight_product;
                            for (std::size_t k = base_len; k < s.size(); ++k)
                              child.weight_product *= ifs.natural_weight(s[k] - 1);
                            levels[n].push_back(std::move(child));
                          });
    }
  }
  return levels;
}

/// J_n, the modified symbolic level set.
inline std::vector<Word> level_frontier(const IfsSystem& ifs, int n) {
  if (n < 0) throw std::invalid_argument("level must be nonnegative");
  return frontier_levels(ifs, n)[static_cast<std::size_t>(n)];
}

/// (lower, upper) with lower <= #J_n < upper under the open set condition.
inline std::pair<double, double> frontier_count_bounds(const IfsSystem& ifs,
                                                       int n) {
  const double lower = std::pow(ifs.min_ratio, -ifs.alpha * n);
  const double upper = std::pow(ifs.min_ratio, -ifs.alpha * (n + 1));
  return {lower, upper};
}

/// One representative point per relative-depth-q descendant word of `word`.
///
/// Every point of the cell S_word(K) lies within r_word * r^q * diameter of
/// the returned cloud.
inline std::vector<Vec> cell_point_cloud(const IfsSystem& ifs, const Word& word,
                                         int q, std::size_t cap = 1000000) {
  if (q < 0) throw std::invalid_argument("cloud depth must be nonnegative");
  const AffineMap outer = ifs.map_of_word(word.symbols);
  std::vector<Vec> pts;
  if (q == 0) {
    pts.push_back(outer.apply(ifs.interior_point));
    return pts;
  }
  std::vector<std::uint8_t> sym;
  detail::extend_word(ifs, sym, 1.0, q,
                      [&](const std::vector<std::uint8_t>& s, double) {
                        if (pts.size() >= cap)
                          throw std::runtime_error(
                              "point cloud exceeds cap; use a smaller depth q");
                        pts.push_back(outer.apply(ifs.apply_word(s, ifs.interior_point)));
                      });
  return pts;
}

namespace detail {

// Cloud used for certified geometry: images of every map fixed point under
// all relative-depth-q frontier words. Covering radius is r^q * diameter.
inline std::vector<Vec> base_decision_cloud(const IfsSystem& ifs, int q) {
  std::vector<Vec> pts;
  const auto seeds = seed_points(ifs);
  if (q == 0) return seeds;
  std::vector<std::uint8_t> sym;
  extend_word(ifs, sym, 1.0, q,
              [&](const std::vector<std::uint8_t>& s, double) {
                const AffineMap m = ifs.map_of_word(s);
                for (const Vec& p : seeds) pts.push_back(m.apply(p));
              });
  return pts;
}

}  // namespace detail

/// Build an IfsSystem from raw maps; derives alpha, r, a certified diameter
/// bound and bounding box. `interior` may be empty, in which case the fixed
/// point of the full cycle S_1 ∘ ... ∘ S_N is used.
inline IfsSystem make_ifs(std::vector<Similitude> maps, std::string name = "custom",
                          Vec interior = Vec()) {
  if (maps.size() < 2) throw std::invalid_argument("need at least two maps");
  IfsSystem ifs;
  ifs.dim = maps[0].dim();
  for (const auto& s : maps)
    if (s.dim() != ifs.dim) throw std::invalid_argument("map dimension mismatch");
  ifs.maps = std::move(maps);
  ifs.name = std::move(name);

  std::vector<double> ratios;
  for (const auto& s : ifs.maps) ratios.push_back(s.ratio);
  ifs.alpha = hausdorff_dim(ratios);
  ifs.min_ratio = *std::min_element(ratios.begin(), ratios.end());
  ifs.homogeneous = true;
  for (double r : ratios)
    if (std::abs(r - ratios[0]) > 0.0) ifs.homogeneous = false;

  ifs.r_pow.resize(257);
  ifs.r_pow[0] = 1.0;
  for (std::size_t k = 1; k < ifs.r_pow.size(); ++k)
    ifs.r_pow[k] = ifs.r_pow[k - 1] * ifs.min_ratio;

  for (const auto& s : ifs.maps) ifs.fixed_points.push_back(s.fixed_point());

  if (interior.size() == 0) {
    AffineMap cycle = AffineMap::identity(ifs.dim);
    for (const auto& s : ifs.maps) cycle = cycle.then_inner(s);
    ifs.interior_point = cycle.fixed_point();
  } else {
    if (interior.size() != ifs.dim)
      throw std::invalid_argument("interior point dimension mismatch");
    ifs.interior_point = std::move(interior);
  }

  // Certified diameter / box: a depth-q cloud covers K to radius r^q * diam,
  // hence diam(K) <= bboxdiag(cloud) / (1 - 2 r^q) for 2 r^q < 1.
  int q = 2;
  while (ifs.r_pow[static_cast<std::size_t>(q)] > 1.0 / 32.0 &&
         std::pow(static_cast<double>(ifs.branch()), q + 1) < 2.0e5)
    ++q;
  const double rq = ifs.r_pow[static_cast<std::size_t>(q)];
  if (2.0 * rq >= 1.0)
    throw std::runtime_error("contraction too weak to certify a diameter bound");
  const auto cloud = detail::base_decision_cloud(ifs, q);
  Vec lo = cloud[0], hi = cloud[0];
  for (const Vec& p : cloud) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double raw = (hi - lo).norm();
  ifs.diameter = raw / (1.0 - 2.0 * rq);
  const double pad = rq * ifs.diameter;
  ifs.box_lo = lo.array() - pad;
  ifs.box_hi = hi.array() + pad;
  return ifs;
}

inline Weights natural_weights(const IfsSystem& ifs) {
  Weights w;
  w.kind = Weights::Kind::natural;
  for (int i = 0; i < ifs.branch(); ++i) w.p.push_back(ifs.natural_weight(i));
  return w;
}

inline double word_weight(const Weights& w, const std::vector<std::uint8_t>& symbols) {
  double p = 1.0;
  for (auto s : symbols) p *= w.p[s - 1];
  return p;
}

// ---------------------------------------------------------------------------
// Built-in systems.

inline IfsSystem builtin_interval() {
  Mat id = Mat::Identity(1, 1);
  std::vector<Similitude> maps{
      {0.5, id, Vec::Zero(1)},
      {0.5, id, Vec::Constant(1, 0.5)},
  };
  return make_ifs(std::move(maps), "interval", Vec::Constant(1, 0.5));
}

/// d-dimensional gasket: N = d+1 maps of ratio 1/2 fixed at 0, e_1, .., e_d.
inline IfsSystem builtin_gasket(int d) {
  if (d < 1) throw std::invalid_argument("gasket dimension must be >= 1");
  Mat id = Mat::Identity(d, d);
  std::vector<Similitude> maps;
  for (int i = 0; i <= d; ++i) {
    Vec v = Vec::Zero(d);
    if (i > 0) v(i - 1) = 1.0;
    maps.emplace_back(0.5, id, 0.5 * v);
  }
  return make_ifs(std::move(maps), "gasket" + std::to_string(d));
}

/// Sierpinski carpet: 8 maps of ratio 1/3 toward the boundary positions of
/// the unit square, labeled clockwise from the top-left corner.
inline IfsSystem builtin_carpet() {
  Mat id = Mat::Identity(2, 2);
  const double pts[8][2] = {{0, 1},   {0.5, 1}, {1, 1}, {1, 0.5},
                            {1, 0},   {0.5, 0}, {0, 0}, {0, 0.5}};
  std::vector<Similitude> maps;
  for (const auto& q : pts) {
    Vec v(2);
    v << q[0], q[1];
    maps.emplace_back(1.0 / 3.0, id, (2.0 / 3.0) * v);
  }
  Vec o(2);
  o << 0.5, 1.0 / 3.0;  // on the top edge of the bottom-middle cell, inside (0,1)^2
  return make_ifs(std::move(maps), "carpet", o);
}

/// Non-homogeneous Cantor-type set on the line with ratios {1/2, 1/4}.
inline IfsSystem builtin_nonhom_line() {
  Mat id = Mat::Identity(1, 1);
  std::vector<Similitude> maps{
      {0.5, id, Vec::Zero(1)},
      {0.25, id, Vec::Constant(1, 0.75)},
  };
  return make_ifs(std::move(maps), "nonhom-line");
}

/// Middle-third Cantor set; its augmented tree has no horizontal edges, so it
/// realizes the plain binary tree.
inline IfsSystem builtin_cantor() {
  Mat id = Mat::Identity(1, 1);
  std::vector<Similitude> maps{
      {1.0 / 3.0, id, Vec::Zero(1)},
      {1.0 / 3.0, id, Vec::Constant(1, 2.0 / 3.0)},
  };
  return make_ifs(std::move(maps), "cantor");
}

inline IfsSystem builtin_ifs(const std::string& tag) {
  if (tag == "interval") return builtin_interval();
  if (tag == "carpet") return builtin_carpet();
  if (tag == "nonhom-line") return builtin_nonhom_line();
  if (tag == "cantor") return builtin_cantor();
  if (tag.rfind("gasket", 0) == 0 && tag.size() > 6)
    return builtin_gasket(std::stoi(tag.substr(6)));
  throw std::invalid_argument("unknown builtin IFS: " + tag);
}

}  // namespace fractalwalk
