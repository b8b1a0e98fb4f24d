#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <unordered_map>
#include <vector>

#include "fractalwalk/augtree.hpp"
#include "fractalwalk/common.hpp"
#include "fractalwalk/manifest.hpp"

namespace fractalwalk {

struct ChainSpec {
  double lambda = 0.0;  // return ratio, in (0,1)
  Weights weights;
};

/// Comparability of weight products across horizontal edges. A set of weights
/// admits a quasi-natural walk iff the associated self-similar measure is
/// doubling; at finite depth that shows up as a bounded p_x/p_y band.
struct AdmissibilityReport {
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
  long edges = 0;
  bool within(double lo, double hi) const {
    return edges == 0 || (min_ratio >= lo && max_ratio <= hi);
  }
};

inline std::vector<double> weight_products(const AugmentedTree& t,
                                           const Weights& w) {
  std::vector<double> p(static_cast<std::size_t>(t.vertex_count()), 1.0);
  for (int v = 1; v < t.vertex_count(); ++v) {
    p[v] = p[t.parent[v]];
    for (std::size_t i = t.word[t.parent[v]].size(); i < t.word[v].size(); ++i)
      p[v] *= w.p[t.word[v][i] - 1];
  }
  return p;
}

inline AdmissibilityReport admissibility(const AugmentedTree& t,
                                         const Weights& w) {
  const auto p = weight_products(t, w);
  AdmissibilityReport rep;
  for (int x = 0; x < t.vertex_count(); ++x)
    for (int y : t.horizontal[x]) {
      if (y < x) continue;
      const double r = p[x] / p[y];
      rep.min_ratio = std::min({rep.min_ratio, r, 1.0 / r});
      rep.max_ratio = std::max({rep.max_ratio, r, 1.0 / r});
      ++rep.edges;
    }
  return rep;
}

/// Conductances of the reversible walk: c(x,x^-) = p_x lambda^{-|x|} on
/// vertical edges, the geometric mean of the incident vertical conductances
/// on horizontal edges.
struct ConductanceTable {
  const AugmentedTree* tree = nullptr;
  double lambda = 0.0;
  Weights weights;
  std::vector<double> p;         // weight product per vertex
  std::vector<double> vertical;  // c(x, parent); 0 at the root
  std::vector<std::vector<std::pair<int, double>>> adj;
  std::vector<double> m;  // total conductance

  double conductance(int x, int y) const {
    for (const auto& [u, c] : adj[static_cast<std::size_t>(x)])
      if (u == y) return c;
    return 0.0;
  }
};

struct ConductanceOptions {
  double band_lo = 1.0 / 16.0;
  double band_hi = 16.0;
};

inline ConductanceTable build_conductances(const AugmentedTree& t,
                                           const ChainSpec& spec,
                                           const ConductanceOptions& opt = {}) {
  if (!(spec.lambda > 0.0 && spec.lambda < 1.0))
    throw ConfigError("lambda must lie in (0,1)");
  if (static_cast<int>(spec.weights.p.size()) != t.ifs.branch())
    throw ConfigError("weights size does not match the IFS");
  if (spec.weights.kind == Weights::Kind::custom) {
    const auto rep = admissibility(t, spec.weights);
    if (!rep.within(opt.band_lo, opt.band_hi))
      throw std::invalid_argument(
          "weights are not admissible: horizontal comparability ratio " +
          format_double(rep.max_ratio) +
          " leaves the configured band; a quasi-natural walk needs a "
          "doubling self-similar measure");
  }

  ConductanceTable c;
  c.tree = &t;
  c.lambda = spec.lambda;
  c.weights = spec.weights;
  c.p = weight_products(t, spec.weights);
  c.vertical.assign(static_cast<std::size_t>(t.vertex_count()), 0.0);
  std::vector<double> lam_pow(static_cast<std::size_t>(t.max_level) + 1, 1.0);
  for (std::size_t k = 1; k < lam_pow.size(); ++k)
    lam_pow[k] = lam_pow[k - 1] / spec.lambda;
  for (int v = 1; v < t.vertex_count(); ++v)
    c.vertical[v] = c.p[v] * lam_pow[static_cast<std::size_t>(t.level[v])];

  c.adj.resize(static_cast<std::size_t>(t.vertex_count()));
  c.m.assign(static_cast<std::size_t>(t.vertex_count()), 0.0);
  for (int v = 0; v < t.vertex_count(); ++v) {
    auto& row = c.adj[static_cast<std::size_t>(v)];
    if (t.parent[v] >= 0) row.emplace_back(t.parent[v], c.vertical[v]);
    for (int ch : t.children[v]) row.emplace_back(ch, c.vertical[ch]);
    for (int u : t.horizontal[v])
      row.emplace_back(u, std::sqrt(c.vertical[v] * c.vertical[u]));
    std::sort(row.begin(), row.end());
    for (const auto& [u, cc] : row) c.m[v] += cc;
  }
  return c;
}

/// lambda(x) = c(x,x^-) / sum over children of c(x,y).
inline double return_ratio(const ConductanceTable& c, int x) {
  if (x == 0) throw std::invalid_argument("return ratio undefined at the root");
  const AugmentedTree& t = *c.tree;
  if (t.level[x] >= t.max_level)
    throw std::invalid_argument("vertex has no children in the built tree");
  double down = 0.0;
  for (int ch : t.children[x]) down += c.conductance(x, ch);
  return c.conductance(x, t.parent[x]) / down;
}

/// max |c(x,y) - c(y,x)| over directed edge copies (0 by construction;
/// reported for regression safety).
inline double reversibility_defect(const ConductanceTable& c) {
  double worst = 0.0;
  for (int x = 0; x < c.tree->vertex_count(); ++x)
    for (const auto& [y, cxy] : c.adj[static_cast<std::size_t>(x)])
      worst = std::max(worst, std::abs(cxy - c.conductance(y, x)));
  return worst;
}

// ---------------------------------------------------------------------------
// Exact truncated solves: the walk on X_m with J_m absorbing.

/// Green-function solves for one truncation level m. Everything reduces to
/// columns of (I - Q)^{-1}, computed on a single sparse factorization:
///   F_m(x,y) = G_m(x,y)/G_m(y,y),  G_m(x,w) = m(w) G_m(w,x) / m(x),
/// and absorption enters a level-m vertex only through its parent.
class TruncatedChain {
 public:
  TruncatedChain(const ConductanceTable& table, int m,
                 long direct_solver_limit = 150000)
      : table_(&table), m_(m) {
    const AugmentedTree& t = *table.tree;
    if (m < 1 || m > t.max_level)
      throw std::invalid_argument("truncation level out of range");
    nt_ = t.count_up_to(m - 1);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(nt_) * 6);
    for (int x = 0; x < nt_; ++x) {
      trips.emplace_back(x, x, 1.0);
      for (const auto& [y, cxy] : table.adj[static_cast<std::size_t>(x)])
        if (y < nt_) trips.emplace_back(x, y, -cxy / table.m[x]);
    }
    A_.resize(nt_, nt_);
    A_.setFromTriplets(trips.begin(), trips.end());
    A_.makeCompressed();
    if (nt_ <= direct_solver_limit) {
      lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
      lu_->compute(A_);
      if (lu_->info() != Eigen::Success)
        throw NumericError("sparse factorization failed (singular system)");
    }
  }

  int level() const { return m_; }
  int transient_count() const { return nt_; }

  /// g with g[x] = G_m(x, y), for all transient x.
  const Eigen::VectorXd& green_column(int y) const {
    if (y < 0 || y >= nt_) throw std::invalid_argument("target not transient");
    auto it = columns_.find(y);
    if (it != columns_.end()) return it->second;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(nt_);
    e(y) = 1.0;
    return columns_.emplace(y, solve(e)).first->second;
  }

  double green(int x, int y) const { return green_column(y)(x); }
  double green_root() const { return green_column(0)(0); }

  /// Probability of ever visiting y from x before absorption at level m.
  double F(int x, int y) const {
    if (x == y) return 1.0;
    const auto& g = green_column(y);
    return g(x) / g(y);
  }

  /// Distribution of the absorption vertex in J_m starting from x, indexed
  /// by position within level m.
  Eigen::VectorXd absorption_row(int x) const {
    const AugmentedTree& t = *table_->tree;
    const auto& g = green_column(x);
    const int first = t.level_first(m_);
    Eigen::VectorXd row(t.level_size(m_));
    for (int z = first; z < t.count_up_to(m_); ++z)
      row(z - first) = g(t.parent[z]) * table_->vertical[z] / table_->m[x];
    return row;
  }

  /// Solves the Dirichlet problem on X_m with boundary data u on J_m;
  /// returns values for all vertices of X_m (ids 0 .. count_up_to(m)).
  Eigen::VectorXd harmonic_extension(const Eigen::VectorXd& u) const {
    const AugmentedTree& t = *table_->tree;
    if (u.size() != t.level_size(m_))
      throw std::invalid_argument("boundary data size mismatch");
    const int first = t.level_first(m_);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nt_);
    for (int z = first; z < t.count_up_to(m_); ++z) {
      const int w = t.parent[z];
      rhs(w) += table_->vertical[z] / table_->m[w] * u(z - first);
    }
    const Eigen::VectorXd f = solve(rhs);
    Eigen::VectorXd full(t.count_up_to(m_));
    full.head(nt_) = f;
    full.tail(t.level_size(m_)) = u;
    return full;
  }

 private:
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    if (lu_) {
      Eigen::VectorXd x = lu_->solve(rhs);
      if (lu_->info() != Eigen::Success) throw NumericError("sparse solve failed");
      return x;
    }
    // Damped Jacobi sweeps; Q is substochastic with spectral radius < 1.
    Eigen::VectorXd x = rhs;
    for (int it = 0; it < 100000; ++it) {
      Eigen::VectorXd r = rhs - A_ * x;
      x += r;
      if (r.cwiseAbs().maxCoeff() < 1e-13) return x;
    }
    throw NumericError("iterative solve did not reach tolerance");
  }

  const ConductanceTable* table_;
  int m_;
  int nt_ = 0;
  Eigen::SparseMatrix<double> A_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
  mutable std::unordered_map<int, Eigen::VectorXd> columns_;
};

/// Lazy cache of truncated chains per level, plus level-limit extrapolation
/// of F by deepening truncations.
class ChainSolver {
 public:
  explicit ChainSolver(const ConductanceTable& table) : table_(&table) {}

  const ConductanceTable& table() const { return *table_; }
  const AugmentedTree& tree() const { return *table_->tree; }
  double lambda() const { return table_->lambda; }

  const TruncatedChain& at_level(int m) {
    auto it = chains_.find(m);
    if (it == chains_.end())
      it = chains_.emplace(m, TruncatedChain(*table_, m)).first;
    return it->second;
  }

  struct Converged {
    double value = 0.0;
    int m_used = 0;
    bool converged = false;
  };

  /// F_m(x,y) for increasing m until two consecutive values agree to the
  /// relative tolerance; the sequence is nondecreasing, which is asserted.
  Converged F_converged(int x, int y, double tol) {
    const AugmentedTree& t = tree();
    Converged out;
    double prev = -1.0;
    const int m0 = std::max({t.level[x], t.level[y]}) + 1;
    for (int m = m0; m <= t.max_level; ++m) {
      const double f = at_level(m).F(x, y);
      if (prev >= 0.0 && f < prev * (1.0 - 1e-9) - 1e-12)
        throw NumericError("F_m is not monotone in m");
      out.value = f;
      out.m_used = m;
      if (prev >= 0.0 && std::abs(f - prev) <= tol * std::max(f, 1e-300)) {
        out.converged = true;
        return out;
      }
      prev = f;
    }
    return out;  // flagged unconverged
  }

 private:
  const ConductanceTable* table_;
  std::map<int, TruncatedChain> chains_;
};

// ---------------------------------------------------------------------------
// Strong isoperimetric inequality check on seeded random connected sets.

struct IsoperimetryReport {
  double worst_subtree_ratio = 0.0;
  double worst_full_ratio = 0.0;
  double subtree_bound = 0.0;  // (1+lambda)/(1-lambda)
  long sets = 0;
};

inline IsoperimetryReport isoperimetric_check(const ConductanceTable& c,
                                              long n_sets, std::uint64_t seed,
                                              int mean_size = 24) {
  const AugmentedTree& t = *c.tree;
  const int cap_level = t.max_level - 1;
  if (cap_level < 0) throw std::invalid_argument("tree too shallow");
  const int nv = t.count_up_to(cap_level);
  IsoperimetryReport rep;
  rep.subtree_bound = (1.0 + c.lambda) / (1.0 - c.lambda);

  auto subtree_m = [&](int x) {
    double v = c.vertical[x];
    for (int ch : t.children[x]) v += c.vertical[ch];
    return v;
  };

  for (long s = 0; s < n_sets; ++s) {
    SplitMix64 rng = SplitMix64::stream(seed, static_cast<std::uint64_t>(s));
    const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(nv)));
    const long target =
        1 + static_cast<long>(std::floor(std::log(std::max(rng.uniform(), 1e-300)) /
                                         std::log(1.0 - 1.0 / mean_size)));
    std::set<int> A{start};
    std::vector<int> frontier;
    auto push_neighbors = [&](int v) {
      for_neighbors(t, v, cap_level, [&](int u) {
        if (!A.count(u)) frontier.push_back(u);
      });
    };
    push_neighbors(start);
    while (static_cast<long>(A.size()) < std::min<long>(target, 500) &&
           !frontier.empty()) {
      const std::size_t i = rng.below(frontier.size());
      const int v = frontier[i];
      frontier.erase(frontier.begin() + static_cast<long>(i));
      if (A.count(v)) continue;
      A.insert(v);
      push_neighbors(v);
    }

    double mT = 0.0, cT = 0.0, mf = 0.0, cf = 0.0;
    for (int x : A) {
      mT += subtree_m(x);
      mf += c.m[x];
      if (x != 0 && !A.count(t.parent[x])) cT += c.vertical[x];
      for (int ch : t.children[x])
        if (!A.count(ch)) cT += c.vertical[ch];
      for (const auto& [u, cxu] : c.adj[static_cast<std::size_t>(x)])
        if (!A.count(u)) cf += cxu;
    }
    if (cT <= 0.0 || cf <= 0.0) throw NumericError("empty boundary in isoperimetry");
    rep.worst_subtree_ratio = std::max(rep.worst_subtree_ratio, mT / cT);
    rep.worst_full_ratio = std::max(rep.worst_full_ratio, mf / cf);
    ++rep.sets;
  }
  return rep;
}

}  // namespace fractalwalk
