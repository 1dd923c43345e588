#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bitrade/environment.hpp"
#include "bitrade/grid.hpp"
#include "support.hpp"

using namespace bitrade;

TEST_CASE("finite support: validation and exact sampling law") {
  CHECK_THROWS_AS(Environment::finite_support({}, 1), std::invalid_argument);
  CHECK_THROWS_AS(Environment::finite_support({{{0.0, 1.0}, Rational(1, 3)}}, 1), std::invalid_argument);

  Environment env = Environment::finite_support(
      {{{0.0, 1.0}, Rational(1, 4)}, {{0.25, 0.75}, Rational(3, 4)}}, 17);
  long long heavy = 0;
  const int n = 40000;
  for (int t = 1; t <= n; ++t)
    if (env.sample(t) == Valuation{0.25, 0.75}) ++heavy;
  double freq = static_cast<double>(heavy) / n;
  CHECK(std::abs(freq - 0.75) < 0.01);

  // identical seeds give identical streams
  Environment a = Environment::finite_support({{{0.0, 1.0}, Rational(1, 2)}, {{0.25, 0.75}, Rational(1, 2)}}, 5);
  Environment b = Environment::finite_support({{{0.0, 1.0}, Rational(1, 2)}, {{0.25, 0.75}, Rational(1, 2)}}, 5);
  for (int t = 1; t <= 100; ++t) REQUIRE(a.sample(t) == b.sample(t));

  CHECK_THROWS_AS(a.sample(5), std::logic_error);  // rounds advance sequentially
}

TEST_CASE("two-point biased: atoms and probabilities") {
  Environment env = Environment::two_point_biased(Rational(1, 10), true, 3);
  REQUIRE(env.atoms().size() == 2);
  CHECK(env.atoms()[0].v == Valuation{0.0, 1.0});
  CHECK(env.atoms()[0].w == Rational(11, 20));  // (1 + 1/10)/2 = 0.55
  CHECK(env.atoms()[1].w == Rational(9, 20));
  Environment env2 = Environment::two_point_biased(Rational(1, 10), false, 3);
  CHECK(env2.atoms()[0].w == Rational(9, 20));
}

TEST_CASE("segment uniform: samples stay exactly on the segment") {
  Environment env = Environment::segment_uniform({0.0, 0.5}, {0.5, 1.0}, 21);
  for (int t = 1; t <= 500; ++t) {
    Valuation v = env.sample(t);
    REQUIRE(v.b - v.s == 0.5);
    REQUIRE(v.s >= 0.0);
    REQUIRE(v.s <= 0.5);
  }
}

TEST_CASE("adversarial sequence: worked first steps") {
  // find a seed whose first move is "right": the emitted pair must be
  // (2 delta / 3, 1/2) and the next pair advances by delta/9
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    Environment env = Environment::adversarial_3t(0.3, seed);
    Valuation v1 = env.sample(1);
    if (env.trace().rounds[0].gamma != 1) continue;
    CHECK(v1.b == 0.5);
    CHECK_THAT(v1.s, Catch::Matchers::WithinAbs(0.2, 1e-15));  // b_1 = 2 delta / 3
    env.sample(2);
    const auto& r2 = env.trace().rounds[1];
    CHECK_THAT(r2.a, Catch::Matchers::WithinAbs(0.2 + 0.3 / 9.0, 1e-15));
    CHECK_THAT(r2.b, Catch::Matchers::WithinAbs(0.2 + 2.0 * 0.3 / 9.0, 1e-15));
    return;
  }
  FAIL("no right-start seed found in 64 tries");
}

TEST_CASE("adversarial sequence: exact bounds and closed form") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Environment env = Environment::adversarial_3t(0.25, seed);
    for (int t = 1; t <= 25; ++t) env.sample(t);
    const auto& tr = env.trace();
    long long pow3 = 3;
    for (size_t t = 0; t < tr.rounds.size(); ++t) {
      const auto& r = tr.rounds[t];
      REQUIRE(r.a >= 0.0);
      REQUIRE(r.a <= 0.25);
      REQUIRE(r.b >= 0.0);
      REQUIRE(r.b <= 0.25);
      REQUIRE(r.a < r.b);
      // closed form: m_t = delta/2 + sum gamma_s delta/3^s, as integers
      long long m_int = pow3;  // 3^t
      long long f = pow3 / 3;
      for (size_t s = 0; s < t; ++s) {
        m_int += 2LL * tr.rounds[s].gamma * f;
        f /= 3;
      }
      REQUIRE(0.25 * static_cast<double>(m_int - 1) / (2.0 * static_cast<double>(pow3)) == r.a);
      REQUIRE(0.25 * static_cast<double>(m_int + 1) / (2.0 * static_cast<double>(pow3)) == r.b);
      pow3 *= 3;
    }
  }
}

TEST_CASE("adversarial sequence freezes past the exact range") {
  Environment env = Environment::adversarial_3t(0.25, 5);
  for (int t = 1; t <= 40; ++t) env.sample(t);
  const auto& tr = env.trace();
  const auto& frozen = tr.rounds[Environment::kAdversarialExactRounds - 1];
  for (size_t t = Environment::kAdversarialExactRounds; t < tr.rounds.size(); ++t) {
    CHECK(tr.rounds[t].a == frozen.a);
    CHECK(tr.rounds[t].b == frozen.b);
  }
}

TEST_CASE("adversarial certificate: threshold and per-round profits") {
  int seen_all_right = 0, seen_all_left = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    Environment env = Environment::adversarial_3t(0.3, seed);
    for (int t = 1; t <= 3; ++t) env.sample(t);
    const auto& tr = env.trace();
    auto cert = adversarial_certificate(tr);
    bool all_right = true, all_left = true;
    double max_b = 0, min_a = 1;
    for (const auto& r : tr.rounds) {
      (r.gamma > 0 ? all_left : all_right) = false;
      if (r.gamma > 0) max_b = std::max(max_b, r.b);
      else min_a = std::min(min_a, r.a);
      double want = r.gamma > 0 ? 0.5 - 0.3 : 1.0 - 0.3;
      REQUIRE(cert.m_star.profit(r.emitted) >= want);
    }
    if (all_right) {
      ++seen_all_right;
      CHECK(cert.tau > max_b);
      for (const auto& r : tr.rounds) CHECK(cert.m_star.profit(r.emitted) >= 0.2);
    }
    if (all_left) {
      ++seen_all_left;
      CHECK(cert.tau < min_a);
      for (const auto& r : tr.rounds) CHECK(cert.m_star.profit(r.emitted) >= 0.7);
    }
  }
  CHECK(seen_all_right > 0);
  CHECK(seen_all_left > 0);
  CHECK_THROWS_AS(adversarial_certificate(AdversarialTrace{}), std::invalid_argument);
}

TEST_CASE("certificate mean profit approaches the analytic bound") {
  double delta = 0.25;
  double total = 0;
  long long rounds = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Environment env = Environment::adversarial_3t(delta, seed);
    for (int t = 1; t <= 20; ++t) env.sample(t);
    auto cert = adversarial_certificate(env.trace());
    for (const auto& r : env.trace().rounds) {
      total += cert.m_star.profit(r.emitted);
      ++rounds;
    }
  }
  double mean = total / static_cast<double>(rounds);
  CHECK(mean >= 0.5 * (1.5 - 2 * delta) - 0.01);
}

TEST_CASE("exact expectations: biased instance displays") {
  Rational eps(1, 80);
  Mechanism m1 = Mechanism::from_vertices({{0.0, 1.0}});
  Mechanism m2 = Mechanism::rectangle(0.25, 0.75);
  Environment p1 = Environment::two_point_biased(eps, true, 1);
  Environment p2 = Environment::two_point_biased(eps, false, 1);
  CHECK(expected_profit_exact(m1, p1) == (Rational(1) + eps) / 2);
  CHECK(expected_profit_exact(m2, p1) == Rational(1, 2));
  CHECK(expected_profit_exact(m1, p2) == (Rational(1) - eps) / 2);
  CHECK(expected_profit_exact(m2, p2) == Rational(1, 2));
  // the per-round optimal-vs-suboptimal gap is exactly eps/2 under each law
  CHECK(expected_profit_exact(m1, p1) - expected_profit_exact(m2, p1) == eps / 2);
  CHECK(expected_profit_exact(m2, p2) - expected_profit_exact(m1, p2) == eps / 2);
}

TEST_CASE("notched staircase expected profit") {
  Valuation a{0.0, 0.5}, b{0.5, 1.0};
  Environment seg = Environment::segment_uniform(a, b, 1);
  // no samples: the staircase at resolution r trades at 1/2 - r along the
  // segment
  Mechanism base = notched_staircase_mechanism(a, b, {}, 1.0 / 1024, 0.125);
  CHECK(expected_profit_exact(base, seg) == Rational(3, 8));
  CHECK(rational_to_double(expected_profit_exact(base, seg)) >= 0.25 - 2 * 0.125);

  // ten equally spaced samples, notch 1/512, resolution 1/128
  std::vector<Valuation> samples;
  for (int i = 1; i <= 10; ++i) {
    double t = static_cast<double>(i) / 16.0;  // x in (0, 1/2), dyadic
    samples.push_back({t * 0.5, 0.5 + t * 0.5});
  }
  Mechanism m = notched_staircase_mechanism(a, b, samples, 1.0 / 512, 1.0 / 128);
  CHECK(total_profit(m, samples) == 0.0);
  CHECK(rational_to_double(expected_profit_exact(m, seg)) >= 0.2);
}

TEST_CASE("segment integrator agrees with Monte-Carlo") {
  Rng mc(31337);
  for (int trial = 0; trial < 50; ++trial) {
    Mechanism m = testsupport::random_staircase(mc, 5, 6);
    Environment env = Environment::segment_uniform({0.0, 0.5}, {0.5, 1.0}, 1);
    double exact = rational_to_double(expected_profit_exact(m, env));
    const int N = 100000;
    double sum = 0, sumsq = 0;
    Environment draw = Environment::segment_uniform({0.0, 0.5}, {0.5, 1.0}, 7000 + trial);
    for (int t = 1; t <= N; ++t) {
      double p = m.profit(draw.sample(t));
      sum += p;
      sumsq += p * p;
    }
    double mean = sum / N;
    double se = std::sqrt(std::max(1e-12, (sumsq / N - mean * mean) / N));
    REQUIRE(std::abs(mean - exact) <= 4 * se + 1e-6);
  }
}

TEST_CASE("replay: CSV round trip and exhaustion") {
  std::vector<Valuation> seq{{0.0, 0.5}, {0.25, 0.75}, {0.5, 1.0}};
  std::string csv = replay_to_csv(seq);
  CHECK(replay_from_csv(csv) == seq);
  Environment env = Environment::replay(seq);
  for (int t = 1; t <= 3; ++t) CHECK(env.sample(t) == seq[static_cast<size_t>(t - 1)]);
  CHECK_THROWS_AS(env.sample(4), std::runtime_error);
}

TEST_CASE("environment JSON round trip") {
  auto check_roundtrip = [](const Environment& e) {
    Environment back = Environment::from_json(e.to_json(), 9);
    CHECK(back.kind() == e.kind());
    CHECK(back.to_json() == e.to_json());
  };
  check_roundtrip(Environment::finite_support({{{0.0, 1.0}, Rational(1, 2)}, {{0.25, 0.75}, Rational(1, 2)}}, 9));
  check_roundtrip(Environment::segment_uniform({0.0, 0.5}, {0.5, 1.0}, 9));
  check_roundtrip(Environment::two_point_biased(Rational(1, 80), true, 9));
  check_roundtrip(Environment::adversarial_3t(0.25, 9));
  check_roundtrip(Environment::replay({{0.5, 0.5}}));
  CHECK_THROWS_AS(Environment::from_json(nlohmann::json{{"variant", "nope"}}, 1), std::invalid_argument);
}
