#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bitrade/joint_ads.hpp"
#include "support.hpp"

using namespace bitrade;
using testsupport::dyadic_coord;

namespace {
NEMechanism ne_fixed_prices(double p1, double p2) {
  // allocation region [p1,1] x [p2,1]
  return NEMechanism::from_ne_boundary({{p1, 1.0}, {p1, p2}, {1.0, p2}});
}
}  // namespace

TEST_CASE("revenue: fixed prices and staircase thresholds") {
  NEMechanism m = ne_fixed_prices(0.3, 0.6);
  CHECK_THAT(m.revenue({0.5, 0.7}), Catch::Matchers::WithinAbs(0.9, 1e-12));
  CHECK(m.revenue({0.2, 0.9}) == 0.0);  // no trade

  NEMechanism st = NEMechanism::from_ne_boundary({{0.2, 1.0}, {0.2, 0.5}, {0.7, 0.5}, {0.7, 0.1}, {1.0, 0.1}});
  // at (0.5, 0.6) the thresholds are the left shelf: p1 = 0.2, p2 = 0.5
  auto r = st.revenue_record({0.5, 0.6});
  CHECK_THAT(r.p1, Catch::Matchers::WithinAbs(0.2, 1e-12));
  CHECK_THAT(r.p2, Catch::Matchers::WithinAbs(0.5, 1e-12));
  CHECK_THAT(r.rev, Catch::Matchers::WithinAbs(0.7, 1e-12));
  // at (0.8, 0.6) the y = 0.1 shelf spans x in [0.7, 1], so agent 2's
  // threshold is 0.1, not 0.5
  auto r2 = st.revenue_record({0.8, 0.6});
  CHECK_THAT(r2.p1, Catch::Matchers::WithinAbs(0.2, 1e-12));
  CHECK_THAT(r2.p2, Catch::Matchers::WithinAbs(0.1, 1e-12));
  CHECK_THAT(r2.rev, Catch::Matchers::WithinAbs(0.3, 1e-12));

  CHECK(NEMechanism::empty().revenue({1.0, 1.0}) == 0.0);
}

TEST_CASE("NE monotonicity and payment rationality") {
  Rng rng(81);
  for (int trial = 0; trial < 40; ++trial) {
    auto pts = testsupport::random_points(rng, 1 + rng.below(5), 6);
    NEMechanism m = empirical_optimum_ne(pts);
    for (int i = 0; i < 300; ++i) {
      Valuation v{dyadic_coord(rng, 10), dyadic_coord(rng, 10)};
      if (!m.contains(v)) continue;
      Valuation ne{std::min(1.0, v.s + std::ldexp(1.0, -10)), std::min(1.0, v.b + std::ldexp(1.0, -10))};
      REQUIRE(m.contains(ne));
      auto r = m.revenue_record(v);
      REQUIRE(r.p1 <= v.s);
      REQUIRE(r.p2 <= v.b);
      REQUIRE(r.rev >= 0.0);
      REQUIRE(r.rev <= 2.0);
    }
  }
}

TEST_CASE("NE empirical optimum: named instances") {
  auto single = empirical_optimum_ne_full({{0.5, 0.5}});
  CHECK(single.value == 1.0);
  CHECK(single.mechanism.contains({0.5, 0.5}));
  CHECK(single.mechanism.revenue({0.5, 0.5}) == 1.0);
  CHECK_FALSE(single.mechanism.contains({0.4999999, 0.5}));

  // two antichain points: allocating both yields threshold sums of 1 each
  auto pair = empirical_optimum_ne_full({{0.875, 0.125}, {0.125, 0.875}});
  CHECK(pair.value == 2.0);
  CHECK(total_revenue(pair.mechanism, {{0.875, 0.125}, {0.125, 0.875}}) == 2.0);

  auto empty = empirical_optimum_ne_full({});
  CHECK(empty.value == 0.0);
  CHECK(empty.mechanism.is_empty());
}

TEST_CASE("revenue decomposition matches the direct sum exactly") {
  Rng rng(82);
  for (int trial = 0; trial < 60; ++trial) {
    auto pts = testsupport::random_points(rng, 1 + rng.below(6), 4);
    NEMechanism m = empirical_optimum_ne(pts);
    if (m.is_empty()) continue;
    REQUIRE(total_revenue(m, pts) == total_revenue_decomposed(m, pts));
  }
}

TEST_CASE("NE oracle equivalence on small instances") {
  Rng rng(83);
  for (int trial = 0; trial < 40; ++trial) {
    auto pts = testsupport::random_points(rng, 1 + rng.below(6), 3);
    std::vector<Valuation> refl;
    for (const auto& p : pts) refl.push_back(reflect_ne(p));
    PointGrid g = build_grid(refl);
    double brute = -1e300;
    enumerate_complete_paths(g, [&](const std::vector<Valuation>& path) {
      NEMechanism m = NEMechanism::from_reflected(Mechanism::from_vertices(path));
      brute = std::max(brute, total_revenue(m, pts));
    });
    auto r = empirical_optimum_ne_full(pts);
    REQUIRE(r.value == brute);
    REQUIRE(total_revenue(r.mechanism, pts) == brute);
  }
}

TEST_CASE("NE simplification: containment and bounded revenue drop") {
  Rng rng(84);
  for (int trial = 0; trial < 40; ++trial) {
    auto pts = testsupport::random_points(rng, 1 + rng.below(5), 8);
    NEMechanism m = empirical_optimum_ne(pts);
    if (m.is_empty()) continue;
    for (int h : {1, 2, 3}) {
      NEMechanism s = simplify_ne(m, DyadicPrecision{h});
      double eps = std::ldexp(1.0, -h);
      for (int i = 0; i < 400; ++i) {
        Valuation v{dyadic_coord(rng, 10), dyadic_coord(rng, 10)};
        if (m.contains(v)) {
          REQUIRE(s.contains(v));
          REQUIRE(m.revenue(v) - s.revenue(v) <= 4 * eps);
        }
        REQUIRE(s.revenue(v) >= 0.0);
        REQUIRE(s.revenue(v) <= 2.0);
      }
    }
  }
}

TEST_CASE("run_augment: determinism, range, degenerate convergence") {
  LearnerConfig cfg;
  cfg.horizon = 300;
  cfg.schedule_c = 1.0;
  Environment env = Environment::finite_support({{{1.0, 1.0}, Rational(1, 2)}, {{0.5, 0.5}, Rational(1, 2)}}, 55);
  RunResult a = run_augment(env, cfg);
  Environment env2 = Environment::finite_support({{{1.0, 1.0}, Rational(1, 2)}, {{0.5, 0.5}, Rational(1, 2)}}, 55);
  RunResult b = run_augment(env2, cfg);
  CHECK(runresult_to_json(a).dump() == runresult_to_json(b).dump());
  CHECK(a.problem == "joint-ads");
  for (const auto& r : a.rounds) {
    CHECK(r.profit >= 0.0);
    CHECK(r.profit <= 2.0);
  }
  CHECK(a.regret == a.benchmark - a.cum_profit);

  // all valuations at (1,1): the learner converges to posting prices (1,1)
  LearnerConfig cfg1 = cfg;
  cfg1.horizon = 50;
  Environment ones = Environment::finite_support({{{1.0, 1.0}, Rational(1)}}, 1);
  RunResult rr = run_augment(ones, cfg1);
  CHECK(rr.rounds.back().profit == 2.0);
  for (size_t t = 1; t < rr.rounds.size(); ++t) CHECK(rr.rounds[t].profit == 2.0);
}
