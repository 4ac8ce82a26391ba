// Frozen values of the test oracles themselves.

#include "oracles.hpp"

#include <doctest.h>

TEST_CASE("oracle constants are frozen") {
  CHECK(oracle::kGoldenR == doctest::Approx(0.8090169943749475).epsilon(1e-15));
  CHECK(oracle::kGoldenRho == doctest::Approx(-0.21193535550034182).epsilon(1e-15));
  CHECK(oracle::kGoldenH == doctest::Approx(0.48121182505960347).epsilon(1e-15));
  CHECK(oracle::kCatExpansion == doctest::Approx(0.96242365011920694).epsilon(1e-15));
}

TEST_CASE("brute-force word counts") {
  CHECK(oracle::count_words(2, {"11"}, 3) == 5);
  CHECK(oracle::count_words(2, {"11"}, 10) == 144);
  CHECK(oracle::count_words(3, {"1"}, 2) == 4);
  CHECK(oracle::count_words(2, {"1"}, 4) == 1);
  for (int n = 1; n <= 16; ++n) CHECK(oracle::count_words(2, {"11"}, n) == oracle::fibonacci(n + 2));
}

TEST_CASE("dyadic survival matches word counts") {
  // Hole (3/4, 1): survival to n needs digits 1..n+2 to avoid "11".
  for (int n = 0; n <= 6; ++n) {
    CHECK(oracle::dyadic_survival_fraction(0.75, 1.0, n, 14) ==
          doctest::Approx(oracle::cylinder_survivor_mass(2, {"11"}, 2, n)).epsilon(1e-12));
  }
}

TEST_CASE("oracle chain entropy") {
  const double p = 1.0 / oracle::kPhi;
  CHECK(oracle::markov_entropy({{p, 1.0 - p}, {1.0, 0.0}}) == doctest::Approx(0.48121182505960347).epsilon(1e-9));
  CHECK(oracle::markov_entropy({{0.5, 0.5}, {0.5, 0.5}}) == doctest::Approx(oracle::kLog2));
}

TEST_CASE("oracle ray hits") {
  CHECK(oracle::ray_circle_time(-1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.25) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(oracle::ray_circle_time(-1.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.25) < 0.0);
}
