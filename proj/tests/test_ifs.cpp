#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "fractalwalk/ifs.hpp"

using namespace fractalwalk;

TEST_CASE("hausdorff dimension by bisection") {
  CHECK(hausdorff_dim({0.5, 0.5}) == Catch::Approx(1.0).margin(1e-12));
  CHECK(hausdorff_dim({0.5, 0.5, 0.5}) ==
        Catch::Approx(std::log(3.0) / std::log(2.0)).margin(1e-12));

  // (1/2)^a + (1/4)^a = 1 means t + t^2 = 1 with t = (1/2)^a, so t is the
  // golden ratio conjugate.
  const double t = (std::sqrt(5.0) - 1.0) / 2.0;
  const double expected = std::log(t) / std::log(0.5);
  const double a = hausdorff_dim({0.5, 0.25});
  CHECK(a == Catch::Approx(expected).margin(1e-10));
  CHECK(std::abs(std::pow(0.5, a) + std::pow(0.25, a) - 1.0) <= 1e-12);

  // Shrinking every ratio strictly decreases the dimension.
  CHECK(hausdorff_dim({0.4, 0.2}) < a);
  CHECK(hausdorff_dim({0.45, 0.45}) < 1.0);

  CHECK_THROWS_AS(hausdorff_dim({0.5}), std::invalid_argument);
  CHECK_THROWS_AS(hausdorff_dim({0.5, 1.2}), std::invalid_argument);
}

TEST_CASE("level frontiers of built-ins") {
  const IfsSystem gasket = builtin_gasket(2);
  auto j2 = level_frontier(gasket, 2);
  REQUIRE(j2.size() == 9);
  for (const auto& w : j2) {
    CHECK(w.symbols.size() == 2);
    CHECK(w.level == 2);
    CHECK(w.ratio_product == Catch::Approx(0.25));
  }

  const IfsSystem line = builtin_nonhom_line();
  auto j1 = level_frontier(line, 1);
  std::set<std::string> got;
  for (const auto& w : j1) got.insert(w.str());
  CHECK(got == std::set<std::string>{"11", "12", "2"});

  auto j0 = level_frontier(line, 0);
  REQUIRE(j0.size() == 1);
  CHECK(j0[0].root());
  CHECK(j0[0].level == 0);

  // Frontier members are pairwise non-prefix.
  auto j3 = level_frontier(line, 3);
  for (const auto& a : j3)
    for (const auto& b : j3) {
      if (&a == &b) continue;
      const bool prefix =
          a.symbols.size() <= b.symbols.size() &&
          std::equal(a.symbols.begin(), a.symbols.end(), b.symbols.begin());
      CHECK_FALSE(prefix);
    }
}

TEST_CASE("natural weights sum to one on every frontier") {
  for (const IfsSystem& ifs :
       {builtin_gasket(2), builtin_interval(), builtin_nonhom_line(),
        builtin_carpet()}) {
    const int depth = ifs.branch() > 4 ? 3 : 5;
    auto levels = frontier_levels(ifs, depth);
    for (int n = 0; n <= depth; ++n) {
      double s = 0.0;
      for (const auto& w : levels[n]) s += w.weight_product;
      CHECK(std::abs(s - 1.0) <= 1e-10);
    }
  }
}

TEST_CASE("frontier count bounds") {
  const IfsSystem gasket = builtin_gasket(2);
  auto [lo, hi] = frontier_count_bounds(gasket, 3);
  CHECK(lo == Catch::Approx(27.0).margin(1e-9));
  CHECK(hi == Catch::Approx(81.0).margin(1e-9));
  const double count = static_cast<double>(level_frontier(gasket, 3).size());
  CHECK(lo <= count + 1e-9);
  CHECK(count < hi);

  const IfsSystem interval = builtin_interval();
  auto [lo5, hi5] = frontier_count_bounds(interval, 5);
  CHECK(level_frontier(interval, 5).size() == 32);
  CHECK(lo5 <= 32.0 + 1e-9);
  CHECK(32.0 < hi5);

  const IfsSystem line = builtin_nonhom_line();
  auto [lo1, hi1] = frontier_count_bounds(line, 1);
  CHECK(lo1 == Catch::Approx(std::pow(4.0, line.alpha)).margin(1e-9));
  CHECK(lo1 <= 3.0);
  CHECK(3.0 < hi1);
}

TEST_CASE("cell point clouds") {
  const IfsSystem interval = builtin_interval();
  Word root;
  auto cloud = cell_point_cloud(interval, root, 1);
  REQUIRE(cloud.size() == 2);
  CHECK((cloud[0](0) >= 0.0 && cloud[0](0) <= 0.5));
  CHECK((cloud[1](0) >= 0.5 && cloud[1](0) <= 1.0));

  const IfsSystem gasket = builtin_gasket(2);
  Word one = level_frontier(gasket, 1)[0];
  auto single = cell_point_cloud(gasket, one, 0);
  REQUIRE(single.size() == 1);
  // Inside the cell of map 1 (the corner cell at the origin).
  CHECK(single[0].norm() < 0.5 * gasket.diameter);

  auto g3 = cell_point_cloud(gasket, root, 3);
  REQUIRE(g3.size() == 27);
  for (std::size_t i = 0; i < g3.size(); ++i)
    for (std::size_t j = i + 1; j < g3.size(); ++j)
      CHECK((g3[i] - g3[j]).norm() > 0.0);

  CHECK_THROWS_AS(cell_point_cloud(gasket, root, 6, 100), std::runtime_error);
}

TEST_CASE("builtin catalog and derived constants") {
  for (const char* tag : {"interval", "gasket2", "gasket3", "carpet",
                          "nonhom-line", "cantor"}) {
    const IfsSystem ifs = builtin_ifs(tag);
    CHECK(ifs.name == tag);
    CHECK(ifs.diameter > 0.0);
    // The certified diameter dominates distances of generated points.
    Word root;
    for (const Vec& p : cell_point_cloud(ifs, root, 2))
      for (const Vec& q : cell_point_cloud(ifs, root, 2))
        CHECK((p - q).norm() <= ifs.diameter);
  }
  CHECK(builtin_interval().diameter >= 1.0);
  CHECK(builtin_interval().diameter <= 1.1);
  CHECK(builtin_gasket(2).diameter >= std::sqrt(2.0));
  CHECK(builtin_gasket(2).diameter <= 1.6);
  CHECK_THROWS_AS(builtin_ifs("nope"), std::invalid_argument);

  CHECK(builtin_gasket(2).alpha ==
        Catch::Approx(std::log(3.0) / std::log(2.0)).margin(1e-10));
  CHECK(builtin_carpet().alpha ==
        Catch::Approx(std::log(8.0) / std::log(3.0)).margin(1e-10));
  CHECK(builtin_interval().homogeneous);
  CHECK_FALSE(builtin_nonhom_line().homogeneous);
}

TEST_CASE("weights validation") {
  CHECK_THROWS_AS(Weights::custom({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(Weights::custom({1.5, -0.5}), std::invalid_argument);
  const IfsSystem line = builtin_nonhom_line();
  const Weights w = natural_weights(line);
  double s = 0.0;
  for (int i = 0; i < line.branch(); ++i) {
    CHECK(w.p[i] == Catch::Approx(std::pow(line.maps[i].ratio, line.alpha))
                        .margin(1e-10));
    s += w.p[i];
  }
  CHECK(s == Catch::Approx(1.0).margin(1e-10));

  // Interval: word "12" has weight 1/4 and ratio product 1/4.
  const Weights wi = natural_weights(builtin_interval());
  CHECK(word_weight(wi, {1, 2}) == Catch::Approx(0.25));
}

TEST_CASE("similitude validation") {
  Mat bad(2, 2);
  bad << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(Similitude(0.5, bad, Vec::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(Similitude(1.5, Mat::Identity(2, 2), Vec::Zero(2)),
                  std::invalid_argument);
  const Similitude s(0.5, Mat::Identity(1, 1), Vec::Constant(1, 0.5));
  CHECK(s.fixed_point()(0) == Catch::Approx(1.0));
}
