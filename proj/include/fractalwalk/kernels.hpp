#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fractalwalk/chain.hpp"
#include "fractalwalk/manifest.hpp"
#include "fractalwalk/metric.hpp"

namespace fractalwalk {

struct KernelValue {
  double value = 0.0;
  int m_used = 0;
  bool converged = false;
};

/// Martin kernel K(x,y) = G(x,y)/G(root,y), deepening the truncation until
/// two consecutive levels agree to the relative tolerance.
inline KernelValue martin_kernel(ChainSolver& s, int x, int y, double tol) {
  const AugmentedTree& t = s.tree();
  KernelValue out;
  double prev = -1.0;
  for (int m = std::max({t.level[x], t.level[y]}) + 1; m <= t.max_level; ++m) {
    const auto& g = s.at_level(m).green_column(y);
    const double k = g(x) / g(0);
    out.value = k;
    out.m_used = m;
    if (prev >= 0.0 && std::abs(k - prev) <= tol * std::max(k, 1e-300)) {
      out.converged = true;
      return out;
    }
    prev = k;
  }
  return out;
}

/// Naim kernel between vertices,
/// Theta(x,y) = F(x,y) / (F(x,root) G(root,root) F(root,y)),
/// with all F's at a common truncation and G(root,root) = 1/(1-lambda).
inline KernelValue naim_kernel(ChainSolver& s, int x, int y, double tol) {
  if (x == 0 || y == 0)
    throw std::invalid_argument("Naim kernel needs x, y distinct from the root");
  const AugmentedTree& t = s.tree();
  const double ghat = 1.0 / (1.0 - s.lambda());
  KernelValue out;
  double prev = -1.0;
  for (int m = std::max({t.level[x], t.level[y]}) + 1; m <= t.max_level; ++m) {
    const auto& chain = s.at_level(m);
    const auto& gy = chain.green_column(y);
    const auto& g0 = chain.green_column(0);
    const double f_xy = x == y ? 1.0 : gy(x) / gy(y);
    const double f_0y = gy(0) / gy(y);
    const double f_x0 = g0(x) / g0(0);
    const double theta = f_xy / (f_x0 * ghat * f_0y);
    out.value = theta;
    out.m_used = m;
    if (prev >= 0.0 &&
        std::abs(theta - prev) <= tol * std::max(std::abs(theta), 1e-300)) {
      out.converged = true;
      return out;
    }
    prev = theta;
  }
  return out;
}

/// One evaluated kernel sample (vertex/boundary pair) for exponent fits.
struct KernelSample {
  std::string a, b;
  Half gromov{0};
  double geometric_distance = 0.0;
  double value = 0.0;
  int level_used = 0;
  bool converged = false;
};

/// K(x,xi) for a boundary target: evaluated at deepening prefixes of xi until
/// two consecutive depths agree.
inline KernelSample martin_boundary(ChainSolver& s, int x,
                                    const BoundaryPoint& xi, double tol) {
  const AugmentedTree& t = s.tree();
  KernelSample out;
  out.a = Word{t.word[x]}.str();
  out.b = xi.code();
  out.gromov = gromov_to_boundary(t, xi, x);
  out.geometric_distance = (t.projection(x) - xi.point).norm();
  double prev = -1.0;
  bool prev_conv = false;
  for (int k = std::max(t.level[x], 1); k + 1 <= t.max_level; ++k) {
    const int yk = ray_vertex(t, xi, k);
    const KernelValue kv = martin_kernel(s, x, yk, tol);
    out.value = kv.value;
    out.level_used = k;
    if (prev >= 0.0 && prev_conv && kv.converged &&
        std::abs(kv.value - prev) <= tol * std::max(kv.value, 1e-300)) {
      out.converged = true;
      return out;
    }
    prev = kv.value;
    prev_conv = kv.converged;
  }
  return out;
}

/// Theta(xi,eta) via the deep-prefix surrogate: Theta at the level-k prefix
/// pair, deepened until stable. The sample records the boundary Gromov
/// product and the geometric distance of the two images.
inline KernelSample naim_boundary(ChainSolver& s, const BoundaryPoint& xi,
                                  const BoundaryPoint& eta, double tol, int M) {
  const AugmentedTree& t = s.tree();
  KernelSample out;
  out.a = xi.code();
  out.b = eta.code();
  const BoundaryGromov g = try_boundary_gromov_product(t, xi, eta, M);
  out.gromov = g.product;
  out.geometric_distance = g.geometric_distance;
  double prev = -1.0;
  bool prev_conv = false;
  for (int k = 1; k + 1 <= t.max_level; ++k) {
    const int xk = ray_vertex(t, xi, k), yk = ray_vertex(t, eta, k);
    const KernelValue kv = naim_kernel(s, xk, yk, tol);
    out.value = kv.value;
    out.level_used = k;
    if (prev >= 0.0 && prev_conv && kv.converged &&
        std::abs(kv.value - prev) <= tol * std::max(std::abs(kv.value), 1e-300)) {
      out.converged = g.stabilized;
      return out;
    }
    prev = kv.value;
    prev_conv = kv.converged;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Doob transform toward a boundary point.

/// Row-stochastic transition map of the conditioned walk on X_k, absorbing at
/// J_k: P^xi(x,y) = P(x,y) K(y,xi) / K(x,xi). Rows are exactly stochastic up
/// to solver error; the defect per row is reported.
struct HTransform {
  int absorb_level = 0;
  std::vector<std::vector<std::pair<int, double>>> rows;  // per vertex of X_{k-1}
  std::vector<double> kernel;                             // K(v, xi) on X_k
  std::vector<double> row_defect;
  double max_defect = 0.0;
};

inline HTransform h_transform(ChainSolver& s, const BoundaryPoint& xi, int k) {
  const AugmentedTree& t = s.tree();
  if (k + 2 > t.max_level)
    throw std::invalid_argument("h-transform needs k <= max_level - 2");
  const int m = t.max_level;
  const int yj = ray_vertex(t, xi, m - 1);
  const auto& g = s.at_level(m).green_column(yj);
  HTransform h;
  h.absorb_level = k;
  const int n_all = t.count_up_to(k);
  const int n_in = t.count_up_to(k - 1);
  h.kernel.resize(static_cast<std::size_t>(n_all));
  for (int v = 0; v < n_all; ++v) h.kernel[v] = g(v) / g(0);
  h.rows.resize(static_cast<std::size_t>(n_in));
  h.row_defect.resize(static_cast<std::size_t>(n_in));
  const auto& table = s.table();
  for (int x = 0; x < n_in; ++x) {
    double sum = 0.0;
    for (const auto& [y, cxy] : table.adj[static_cast<std::size_t>(x)]) {
      const double p = cxy / table.m[x] * h.kernel[y] / h.kernel[x];
      h.rows[x].emplace_back(y, p);
      sum += p;
    }
    h.row_defect[x] = std::abs(sum - 1.0);
    h.max_defect = std::max(h.max_defect, h.row_defect[x]);
  }
  return h;
}

/// Walks the conditioned chain from `start` to absorption at J_k.
inline int h_walk(const HTransform& h, const AugmentedTree& t, int start,
                  SplitMix64& rng) {
  int v = start;
  while (t.level[v] < h.absorb_level) {
    const auto& row = h.rows[static_cast<std::size_t>(v)];
    double u = rng.uniform();
    double run = 0.0;
    int next = row.back().first;
    for (const auto& [y, p] : row) {
      run += p;
      if (u <= run) {
        next = y;
        break;
      }
    }
    v = next;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Homogeneous-tree closed form and exponent fits.

/// Boundary jump kernel of the lambda-walk on the plain N-ary tree as a
/// function of the Gromov product of the boundary pair.
inline double tree_closed_form(int N, double lambda, int gp) {
  if (N < 2 || !(lambda > 0.0 && lambda < 1.0) || gp < 0)
    throw std::invalid_argument("bad tree closed-form arguments");
  const double n = static_cast<double>(N);
  const double first = (1.0 - lambda) * (n - 1.0) / (2.0 * (n - lambda));
  const double second = n * (1.0 - lambda) * (1.0 - lambda) *
                        std::pow(n / lambda, gp) /
                        (2.0 * lambda * (n - lambda));
  return first + second;
}

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double resid_lo = 0.0;  // min residual (log scale)
  double resid_hi = 0.0;  // max residual (log scale)
  long n_used = 0;
};

/// Least-squares fit of log(value) against log(geometric distance), or
/// against the Gromov product when use_gromov_abscissa is set. The residual
/// band gives the empirical two-sided comparability constants.
inline ExponentFit fit_exponents(const std::vector<KernelSample>& samples,
                                 bool use_gromov_abscissa = false,
                                 long min_samples = 30) {
  std::vector<double> xs, ys;
  std::set<double> distinct;
  for (const auto& s : samples) {
    if (!s.converged || !(s.value > 0.0)) continue;
    const double x =
        use_gromov_abscissa ? s.gromov.value() : std::log(s.geometric_distance);
    xs.push_back(x);
    ys.push_back(std::log(s.value));
    distinct.insert(x);
  }
  if (static_cast<long>(distinct.size()) < min_samples)
    throw std::invalid_argument(
        "need at least " + std::to_string(min_samples) +
        " converged samples with distinct distances, have " +
        std::to_string(distinct.size()));
  const LinearFit f = linear_fit(xs, ys);
  ExponentFit out;
  out.slope = f.slope;
  out.intercept = f.intercept;
  out.n_used = f.n;
  out.resid_lo = std::numeric_limits<double>::infinity();
  out.resid_hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - f.intercept - f.slope * xs[i];
    out.resid_lo = std::min(out.resid_lo, r);
    out.resid_hi = std::max(out.resid_hi, r);
  }
  return out;
}

inline std::string kernel_samples_csv(const std::vector<KernelSample>& samples,
                                      const Manifest& manifest) {
  std::string s = manifest.comment_block("#");
  s += "a,b,gromov_product,geometric_distance,value,level_used,converged\n";
  for (const auto& k : samples)
    s += k.a + "," + k.b + "," + format_double(k.gromov.value()) + "," +
         format_double(k.geometric_distance) + "," + format_double(k.value) +
         "," + std::to_string(k.level_used) + "," + (k.converged ? "1" : "0") +
         "\n";
  return s;
}

}  // namespace fractalwalk
