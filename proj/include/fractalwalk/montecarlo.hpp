#pragma once

#include <map>
#include <thread>
#include <vector>

#include "fractalwalk/chain.hpp"

namespace fractalwalk {

struct StopRule {
  enum class Kind { hit_level, hit_vertex, step_cap };
  Kind kind = Kind::hit_level;
  int level = 1;       // hit_level: absorb on first arrival at this level
  int vertex = -1;     // hit_vertex: success target
  int kill_level = 0;  // hit_vertex: absorbing level counting as a miss
  long cap = 0;        // step_cap: step budget per path

  static StopRule hitting_level(int l) {
    StopRule r;
    r.kind = Kind::hit_level;
    r.level = l;
    return r;
  }
  static StopRule hitting_vertex(int y, int kill_level) {
    StopRule r;
    r.kind = Kind::hit_vertex;
    r.vertex = y;
    r.kill_level = kill_level;
    return r;
  }
  static StopRule steps(long cap) {
    StopRule r;
    r.kind = Kind::step_cap;
    r.cap = cap;
    return r;
  }
};

struct McStats {
  long n_paths = 0;
  long completed = 0;
  std::map<int, long> endpoint_counts;
  long hits = 0;    // hit_vertex successes
  long misses = 0;  // hit_vertex kill-level absorptions
  long step_cap_terminations = 0;
  long total_steps = 0;

  double frequency(int v) const {
    if (completed == 0) return 0.0;
    auto it = endpoint_counts.find(v);
    return it == endpoint_counts.end()
               ? 0.0
               : static_cast<double>(it->second) / completed;
  }
  double stderr_of(int v) const {
    if (completed == 0) return 0.0;
    const double f = frequency(v);
    return std::sqrt(f * (1.0 - f) / completed);
  }
  double hit_frequency() const {
    return completed == 0 ? 0.0 : static_cast<double>(hits) / completed;
  }
  double hit_stderr() const {
    if (completed == 0) return 0.0;
    const double f = hit_frequency();
    return std::sqrt(f * (1.0 - f) / completed);
  }

  void merge(const McStats& o) {
    n_paths += o.n_paths;
    completed += o.completed;
    for (const auto& [v, c] : o.endpoint_counts) endpoint_counts[v] += c;
    hits += o.hits;
    misses += o.misses;
    step_cap_terminations += o.step_cap_terminations;
    total_steps += o.total_steps;
  }
};

namespace detail {

struct WalkerContext {
  const ConductanceTable* table;
  std::vector<std::vector<double>> cum;  // per-vertex cumulative conductances

  explicit WalkerContext(const ConductanceTable& t) : table(&t) {
    cum.resize(t.adj.size());
    for (std::size_t v = 0; v < t.adj.size(); ++v) {
      double run = 0.0;
      cum[v].reserve(t.adj[v].size());
      for (const auto& [u, c] : t.adj[v]) {
        run += c;
        cum[v].push_back(run);
      }
    }
  }

  int step(int v, SplitMix64& rng) const {
    const auto& cv = cum[static_cast<std::size_t>(v)];
    const double u = rng.uniform() * cv.back();
    const std::size_t i =
        std::lower_bound(cv.begin(), cv.end(), u) - cv.begin();
    return table->adj[static_cast<std::size_t>(v)]
        [std::min(i, cv.size() - 1)]
            .first;
  }
};

inline void run_paths(const WalkerContext& ctx, int start, const StopRule& rule,
                      long from, long to, std::uint64_t seed, long safety_cap,
                      McStats* out) {
  const AugmentedTree& t = *ctx.table->tree;
  for (long i = from; i < to; ++i) {
    SplitMix64 rng = SplitMix64::stream(seed, static_cast<std::uint64_t>(i));
    int v = start;
    long steps = 0;
    ++out->n_paths;
    for (;;) {
      if (rule.kind == StopRule::Kind::hit_level && t.level[v] == rule.level) {
        ++out->endpoint_counts[v];
        ++out->completed;
        break;
      }
      if (rule.kind == StopRule::Kind::hit_vertex) {
        if (v == rule.vertex) {
          ++out->hits;
          ++out->completed;
          break;
        }
        if (t.level[v] == rule.kill_level) {
          ++out->misses;
          ++out->completed;
          break;
        }
      }
      if (rule.kind == StopRule::Kind::step_cap && steps == rule.cap) {
        ++out->endpoint_counts[v];
        ++out->completed;
        ++out->step_cap_terminations;
        break;
      }
      // The built tree ends at max_level; the walk is absorbed there.
      if (t.level[v] == t.max_level) {
        ++out->endpoint_counts[v];
        ++out->completed;
        break;
      }
      if (steps >= safety_cap) {
        ++out->step_cap_terminations;
        break;
      }
      v = ctx.step(v, rng);
      ++steps;
    }
    out->total_steps += steps;
  }
}

}  // namespace detail

/// Seeded Monte Carlo runner; path i draws from the stream (seed, i), so the
/// result is bitwise identical for any thread count.
inline McStats monte_carlo(const ConductanceTable& table, int start,
                           const StopRule& rule, long n_paths,
                           std::uint64_t seed, int threads = 1,
                           long safety_cap = 10000000) {
  const AugmentedTree& t = *table.tree;
  if (rule.kind == StopRule::Kind::hit_level &&
      (rule.level < t.level[start] || rule.level > t.max_level))
    throw std::invalid_argument("hit level out of range");
  if (rule.kind == StopRule::Kind::hit_vertex &&
      (rule.vertex < 0 || rule.kill_level <= t.level[rule.vertex] ||
       rule.kill_level > t.max_level))
    throw std::invalid_argument("hit vertex / kill level out of range");
  McStats total;
  if (n_paths == 0) return total;

  const detail::WalkerContext ctx(table);
  const int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    detail::run_paths(ctx, start, rule, 0, n_paths, seed, safety_cap, &total);
  } else {
    std::vector<McStats> parts(static_cast<std::size_t>(nthreads));
    std::vector<std::thread> pool;
    const long chunk = (n_paths + nthreads - 1) / nthreads;
    for (int k = 0; k < nthreads; ++k) {
      const long from = k * chunk, to = std::min<long>(n_paths, from + chunk);
      if (from >= to) break;
      pool.emplace_back(detail::run_paths, std::cref(ctx), start,
                        std::cref(rule), from, to, seed, safety_cap,
                        &parts[static_cast<std::size_t>(k)]);
    }
    for (auto& th : pool) th.join();
    for (const auto& p : parts) total.merge(p);
  }
  if (rule.kind != StopRule::Kind::step_cap && total.completed == 0)
    throw NumericError("every path exceeded the safety step cap");
  return total;
}

}  // namespace fractalwalk
