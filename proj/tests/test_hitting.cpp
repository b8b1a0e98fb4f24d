#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fractalwalk/hitting.hpp"

using namespace fractalwalk;

namespace {

AugmentedTree g_gasket = build_augmented_tree(builtin_gasket(2), {.max_level = 5});

ConductanceTable srw() {
  return build_conductances(g_gasket, {1.0 / 3.0, natural_weights(g_gasket.ifs)});
}

}  // namespace

TEST_CASE("vertex projection") {
  const IfsSystem interval = builtin_interval();
  CHECK(vertex_projection(interval, {1})(0) == Catch::Approx(0.25));
  CHECK(vertex_projection(interval, {})(0) == Catch::Approx(0.5));

  // Projections land strictly inside their cells: positive certified gap to
  // every other cell of the same level.
  const detail::Box root_box{0.5 * (g_gasket.ifs.box_lo + g_gasket.ifs.box_hi),
                             0.5 * (g_gasket.ifs.box_hi - g_gasket.ifs.box_lo)};
  for (int n = 1; n <= 4; ++n) {
    for (int x = g_gasket.level_first(n); x < g_gasket.count_up_to(n); ++x) {
      const Vec p = g_gasket.projection(x);
      for (int y = g_gasket.level_first(n); y < g_gasket.count_up_to(n); ++y) {
        if (y == x) continue;
        const auto box = detail::image_box(g_gasket.word_map(y), root_box);
        double gap = 0.0;
        for (int i = 0; i < p.size(); ++i)
          gap = std::max(gap, std::abs(p(i) - box.c(i)) - box.hw(i));
        CHECK(gap > 0.0);
      }
    }
  }
}

TEST_CASE("exact hitting distribution is the self-similar measure") {
  auto table = srw();
  ChainSolver solver(table);
  const auto rep = hitting_distribution(solver, 2);
  CHECK(rep.exact.size() == 9);
  for (double v : rep.exact) CHECK(v == Catch::Approx(1.0 / 9.0).margin(1e-10));
  CHECK(rep.tv_distance <= 1e-9);

  // Non-homogeneous line, natural weights: {t^2, t^3, t^2} on {11,12,2}
  // with t the golden ratio conjugate.
  auto line = build_augmented_tree(builtin_nonhom_line(), {.max_level = 5});
  auto lt = build_conductances(line, {0.5, natural_weights(line.ifs)});
  ChainSolver ls(lt);
  const auto lrep = hitting_distribution(ls, 1);
  const double t = (std::sqrt(5.0) - 1.0) / 2.0;
  REQUIRE(lrep.exact.size() == 3);  // {11, 12, 2} in lex order
  CHECK(lrep.exact[0] == Catch::Approx(t * t).margin(1e-9));
  CHECK(lrep.exact[1] == Catch::Approx(t * t * t).margin(1e-9));
  CHECK(lrep.exact[2] == Catch::Approx(t * t).margin(1e-9));
  CHECK(lrep.tv_distance <= 1e-9);

  // Carpet with admissible non-natural weights hits the self-similar
  // measure of those weights, not the Hausdorff one.
  auto carpet = build_augmented_tree(builtin_carpet(), {.max_level = 3});
  auto cw = Weights::custom({0.08, 0.15, 0.08, 0.19, 0.08, 0.15, 0.08, 0.19});
  auto ct = build_conductances(carpet, {0.5, cw});
  ChainSolver cs(ct);
  const auto crep = hitting_distribution(cs, 2);
  CHECK(crep.tv_distance <= 1e-9);
  CHECK(crep.exact[0] == Catch::Approx(0.08 * 0.08).margin(1e-9));
}

TEST_CASE("cell hitting probabilities") {
  auto table = srw();
  ChainSolver solver(table);
  CHECK(cell_hitting(solver, 0, 3) == Catch::Approx(1.0).margin(1e-12));
  for (int v = 1; v <= 3; ++v)
    CHECK(cell_hitting(solver, v, 3) == Catch::Approx(1.0 / 3.0).margin(1e-9));

  // Consistency across levels.
  const int x = g_gasket.find({2, 1});
  for (int l = 2; l <= 4; ++l)
    CHECK(cell_hitting(solver, x, l) == Catch::Approx(1.0 / 9.0).margin(1e-9));

  auto line = build_augmented_tree(builtin_nonhom_line(), {.max_level = 5});
  auto lt = build_conductances(line, {0.5, natural_weights(line.ifs)});
  ChainSolver ls(lt);
  const double t = (std::sqrt(5.0) - 1.0) / 2.0;
  const int two = line.find({2});
  CHECK(cell_hitting(ls, two, 2) == Catch::Approx(t * t).margin(1e-9));

  CHECK_THROWS_AS(cell_hitting(solver, g_gasket.find({1, 1, 1}), 2),
                  std::invalid_argument);
}

TEST_CASE("monte carlo columns agree with exact hitting") {
  auto table = srw();
  ChainSolver solver(table);
  const auto rep = hitting_distribution(solver, 2, 20000, 777);
  REQUIRE(rep.with_mc);
  CHECK(rep.mc_paths == 20000);
  for (std::size_t i = 0; i < rep.exact.size(); ++i)
    CHECK(std::abs(rep.mc_freq[i] - rep.exact[i]) <= 4.0 * rep.mc_stderr[i]);

  Manifest m;
  m.set("ifs", "builtin:gasket2");
  const std::string csv = hitting_csv(solver, rep, m);
  CHECK(csv.find("word,exact,target,mc,mc_stderr") != std::string::npos);
  CHECK(csv.find("tv_distance=") != std::string::npos);
}

TEST_CASE("hit level validation") {
  auto table = srw();
  ChainSolver solver(table);
  CHECK_THROWS_AS(hitting_distribution(solver, 0), std::invalid_argument);
  CHECK_THROWS_AS(hitting_distribution(solver, 5), std::invalid_argument);
}
