#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>

#include "fractalwalk/augtree.hpp"
#include "fractalwalk/export.hpp"

using namespace fractalwalk;

namespace {

using EdgeSet = std::set<std::pair<std::string, std::string>>;

EdgeSet h_edges(const AugmentedTree& t, int n) {
  EdgeSet s;
  for (int v = t.level_first(n); v < t.count_up_to(n); ++v)
    for (int u : t.horizontal[v])
      if (v < u) s.insert({word_str(t, v), word_str(t, u)});
  return s;
}

EdgeSet all_h_edges(const AugmentedTree& t) {
  EdgeSet s;
  for (int n = 1; n <= t.max_level; ++n) {
    auto e = h_edges(t, n);
    s.insert(e.begin(), e.end());
  }
  return s;
}

std::string sym_str(const std::vector<std::uint8_t>& w) { return Word{w}.str(); }

}  // namespace

TEST_CASE("gasket2 horizontal edge counts") {
  auto t = build_augmented_tree(builtin_gasket(2), {.max_level = 4});
  CHECK(t.horizontal_edge_count(1) == 3);
  CHECK(t.horizontal_edge_count(2) == 12);
  // All pairs of level-1 cells touch.
  auto e1 = h_edges(t, 1);
  CHECK(e1 == EdgeSet{{"1", "2"}, {"1", "3"}, {"2", "3"}});
}

TEST_CASE("interval horizontal edges are consecutive dyadic cells") {
  auto t = build_augmented_tree(builtin_interval(), {.max_level = 6});
  for (int n = 1; n <= 6; ++n) {
    CHECK(t.horizontal_edge_count(n) == (1L << n) - 1);
    EdgeSet expect;
    for (const auto& [a, b] : interval_horizontal_oracle(n))
      expect.insert({sym_str(a), sym_str(b)});
    CHECK(h_edges(t, n) == expect);
  }
}

TEST_CASE("gasket combinatorial oracle matches geometric builder") {
  auto t = build_augmented_tree(builtin_gasket(2), {.max_level = 5});
  for (int n = 1; n <= 5; ++n) {
    EdgeSet expect;
    for (const auto& [a, b] : gasket_horizontal_oracle(2, n)) {
      auto x = sym_str(a), y = sym_str(b);
      if (y < x) std::swap(x, y);
      expect.insert({x, y});
    }
    CHECK(h_edges(t, n) == expect);
  }
  auto t3 = build_augmented_tree(builtin_gasket(3), {.max_level = 3});
  for (int n = 1; n <= 3; ++n) {
    EdgeSet expect;
    for (const auto& [a, b] : gasket_horizontal_oracle(3, n)) {
      auto x = sym_str(a), y = sym_str(b);
      if (y < x) std::swap(x, y);
      expect.insert({x, y});
    }
    CHECK(h_edges(t3, n) == expect);
  }
}

TEST_CASE("structure invariants") {
  for (const IfsSystem& ifs :
       {builtin_gasket(2), builtin_interval(), builtin_carpet(),
        builtin_nonhom_line(), builtin_cantor()}) {
    const int depth = ifs.branch() > 4 ? 3 : 5;
    auto t = build_augmented_tree(ifs, {.max_level = depth});
    CHECK(t.parent_law_violations() == 0);
    for (int v = 0; v < t.vertex_count(); ++v) {
      for (int u : t.horizontal[v]) {
        CHECK(u != v);
        CHECK(t.level[u] == t.level[v]);
        CHECK(std::binary_search(t.horizontal[u].begin(), t.horizontal[u].end(), v));
      }
      CHECK(std::adjacent_find(t.horizontal[v].begin(), t.horizontal[v].end()) ==
            t.horizontal[v].end());
      if (v > 0) CHECK(t.level[t.parent[v]] == t.level[v] - 1);
    }
    // Levels are lexicographically sorted.
    for (int n = 0; n <= depth; ++n)
      for (int v = t.level_first(n) + 1; v < t.count_up_to(n); ++v)
        CHECK(lex_less(t.word[v - 1], t.word[v]));
  }
}

TEST_CASE("gamma monotonicity") {
  const IfsSystem ifs = builtin_interval();
  auto small = build_augmented_tree(ifs, {.gamma = 0.05, .max_level = 5});
  auto mid = build_augmented_tree(ifs, {.gamma = 0.1 * ifs.diameter, .max_level = 5});
  auto big = build_augmented_tree(ifs, {.gamma = 1.5, .max_level = 5});
  auto se = all_h_edges(small), me = all_h_edges(mid), be = all_h_edges(big);
  CHECK(std::includes(me.begin(), me.end(), se.begin(), se.end()));
  CHECK(std::includes(be.begin(), be.end(), me.begin(), me.end()));
  // gamma = 1.5 also captures next-nearest dyadic cells.
  CHECK(be.size() > me.size());
  CHECK(be.count({"11", "21"}) == 1);
}

TEST_CASE("pruned construction equals exhaustive all-pairs testing") {
  for (const IfsSystem& ifs : {builtin_gasket(2), builtin_carpet()}) {
    auto pruned = build_augmented_tree(ifs, {.max_level = 3});
    auto full = build_augmented_tree(
        ifs, {.max_level = 3, .exhaustive_pairs = true});
    CHECK(all_h_edges(pruned) == all_h_edges(full));
  }
}

TEST_CASE("degree statistics") {
  auto t = build_augmented_tree(builtin_interval(), {.max_level = 5});
  auto s = degree_stats(t);
  // Interior dyadic cell: parent + 2 children + 2 horizontal.
  CHECK(s.max_degree == 5);
  CHECK(t.degree(0) == t.ifs.branch());

  auto g = build_augmented_tree(builtin_gasket(2), {.max_level = 6});
  int prev = 0;
  for (int n = 3; n <= 6; ++n) {
    auto gs = degree_stats(build_augmented_tree(builtin_gasket(2), {.max_level = n}));
    if (n > 3) CHECK(gs.max_degree == prev);
    prev = gs.max_degree;
  }
  CHECK(degree_stats(g).max_degree == prev);
}

TEST_CASE("undecidable pair reported when gamma sits on a boundary") {
  // Next-nearest dyadic cells sit at distance exactly 1 * 2^{-n}. A gamma a
  // hair below 1 demands a covering error under 1e-13 * 2^{-n} to reject,
  // far beyond the cloud cap.
  const IfsSystem ifs = builtin_interval();
  CHECK_THROWS_AS(
      build_augmented_tree(ifs, {.gamma = 1.0 - 1e-13, .max_level = 3,
                                 .max_cloud_points = 3000}),
      UndecidableEdgeError);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(build_augmented_tree(builtin_interval(), {.gamma = 0.0}),
                  ConfigError);
}

TEST_CASE("graph export formats") {
  Manifest m;
  m.set("ifs", "builtin:gasket2");
  m.set("levels", 1);

  auto t1 = build_augmented_tree(builtin_gasket(2), {.max_level = 1});
  const std::string dot = export_graph(t1, GraphFormat::dot, m);
  CHECK(std::count(dot.begin(), dot.end(), '[') == 4 + 3 + 3);  // nodes+v+h
  CHECK(dot.find("config_hash=") != std::string::npos);
  CHECK(dot.find("[kind=v]") != std::string::npos);
  CHECK(dot.find("[kind=h]") != std::string::npos);

  auto t0 = build_augmented_tree(builtin_gasket(2), {.max_level = 0});
  const std::string js = export_graph(t0, GraphFormat::json_adjacency, m);
  auto j = nlohmann::json::parse(js);
  CHECK(j["adjacency"].size() == 1);
  CHECK(j["adjacency"]["@"]["children"].empty());
  CHECK(j["adjacency"]["@"]["horizontal"].empty());

  auto ti = build_augmented_tree(builtin_interval(), {.max_level = 2});
  const std::string csv = export_graph(ti, GraphFormat::csv_edges, m);
  long v_rows = 0, h_rows = 0;
  std::istringstream lines(csv);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find(",v,") != std::string::npos) ++v_rows;
    if (line.find(",h,") != std::string::npos) ++h_rows;
  }
  CHECK(v_rows == 6);
  CHECK(h_rows == 1 + 3);

  // Deterministic: identical manifest and tree give identical bytes.
  CHECK(export_graph(ti, GraphFormat::csv_edges, m) == csv);
  CHECK_THROWS_AS(graph_format_of("yaml"), ConfigError);
}
