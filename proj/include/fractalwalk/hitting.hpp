#pragma once

#include <string>
#include <vector>

#include "fractalwalk/chain.hpp"
#include "fractalwalk/manifest.hpp"
#include "fractalwalk/montecarlo.hpp"

namespace fractalwalk {

/// Interior representative of the cell of a word: S_word(o).
inline Vec vertex_projection(const IfsSystem& ifs,
                             const std::vector<std::uint8_t>& word) {
  return ifs.apply_word(word, ifs.interior_point);
}

/// Exact first-hit distribution on J_level against the self-similar target
/// p_x, with optional Monte Carlo columns.
struct HittingReport {
  int level = 0;
  std::vector<double> exact;   // indexed by position within J_level
  std::vector<double> target;  // p_x
  double tv_distance = 0.0;    // (1/2) sum |exact - target|
  bool with_mc = false;
  std::vector<double> mc_freq, mc_stderr;
  long mc_paths = 0;
  long mc_capped = 0;
};

inline HittingReport hitting_distribution(ChainSolver& s, int level,
                                          long mc_paths = 0,
                                          std::uint64_t seed = 1,
                                          int threads = 1) {
  const AugmentedTree& t = s.tree();
  if (level < 1 || level > t.max_level - 1)
    throw std::invalid_argument("hit level must lie in [1, max_level-1]");
  HittingReport rep;
  rep.level = level;
  const auto row = s.at_level(level).absorption_row(0);
  const int first = t.level_first(level);
  rep.exact.assign(row.data(), row.data() + row.size());
  rep.target.resize(rep.exact.size());
  for (int z = first; z < t.count_up_to(level); ++z)
    rep.target[static_cast<std::size_t>(z - first)] = s.table().p[z];
  for (std::size_t i = 0; i < rep.exact.size(); ++i)
    rep.tv_distance += std::abs(rep.exact[i] - rep.target[i]);
  rep.tv_distance *= 0.5;

  if (mc_paths > 0) {
    rep.with_mc = true;
    const McStats stats = monte_carlo(s.table(), 0, StopRule::hitting_level(level),
                                      mc_paths, seed, threads);
    rep.mc_paths = stats.completed;
    rep.mc_capped = stats.step_cap_terminations;
    rep.mc_freq.resize(rep.exact.size());
    rep.mc_stderr.resize(rep.exact.size());
    for (int z = first; z < t.count_up_to(level); ++z) {
      rep.mc_freq[static_cast<std::size_t>(z - first)] = stats.frequency(z);
      rep.mc_stderr[static_cast<std::size_t>(z - first)] = stats.stderr_of(z);
    }
  }
  return rep;
}

/// P(first hit of J_level lands in the cell of x) = sum of absorption mass
/// over the descendants of x; equals p_x for a quasi-natural walk.
inline double cell_hitting(ChainSolver& s, int x, int level) {
  const AugmentedTree& t = s.tree();
  if (t.level[x] > level) throw std::invalid_argument("|x| must be <= level");
  if (x == 0) return 1.0;
  const auto row = s.at_level(level).absorption_row(0);
  const int first = t.level_first(level);
  double mass = 0.0;
  for (int z = first; z < t.count_up_to(level); ++z)
    if (t.ancestor_at(z, t.level[x]) == x) mass += row(z - first);
  return mass;
}

inline std::string hitting_csv(const ChainSolver& s, const HittingReport& rep,
                               const Manifest& manifest) {
  const AugmentedTree& t = s.tree();
  std::string out = manifest.comment_block("#");
  out += "word,exact,target";
  if (rep.with_mc) out += ",mc,mc_stderr";
  out += "\n";
  const int first = t.level_first(rep.level);
  for (std::size_t i = 0; i < rep.exact.size(); ++i) {
    out += Word{t.word[first + static_cast<int>(i)]}.str() + "," +
           format_double(rep.exact[i]) + "," + format_double(rep.target[i]);
    if (rep.with_mc)
      out += "," + format_double(rep.mc_freq[i]) + "," +
             format_double(rep.mc_stderr[i]);
    out += "\n";
  }
  out += "# tv_distance=" + format_double(rep.tv_distance) + "\n";
  return out;
}

}  // namespace fractalwalk
