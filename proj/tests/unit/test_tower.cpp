#include "gen.hpp"
#include "oracles.hpp"
#include "openrate/tower.hpp"

#include <doctest.h>

#include <cmath>

using namespace openrate;

namespace {

TowerSpec single_branch() {
  TowerSpec t;
  t.branches = {{"A", 1, 2.0, 0.5, false}, {"B", 1, 2.0, 0.5, true}};
  return t;
}

/// Random full-shift tower with sum over branches of 1/J <= 1.
TowerSpec random_tower(gen::Gen& g) {
  TowerSpec t;
  const int k = g.range(2, 5);
  const auto p = g.simplex(k + 1, 0.1);
  for (int i = 0; i < k + 1; ++i) {
    TowerBranch b;
    b.id = std::to_string(i);
    b.R = g.range(1, 4);
    b.J = 1.0 / p[static_cast<std::size_t>(i)];
    b.mass = p[static_cast<std::size_t>(i)];
    b.holed = i == k;
    t.branches.push_back(b);
  }
  t.theta0 = 0.9;
  t.C0 = 2.0;
  return t;
}

}  // namespace

TEST_CASE("golden-mean tower eigenvalue") {
  const auto t = golden_mean_tower();
  const double r = tower_eigenvalue(t);
  CHECK(std::abs(r - oracle::kGoldenR) < 1e-12);
  CHECK(1.0 / (2.0 * r) + 1.0 / (4.0 * r * r) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("trivial towers") {
  TowerSpec closed;
  closed.branches = {{"A", 1, 2.0, 0.5, false}, {"B", 1, 2.0, 0.5, false}};
  CHECK(tower_eigenvalue(closed) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(tower_eigenvalue(single_branch()) == doctest::Approx(0.5).epsilon(1e-14));
  TowerSpec all_holed;
  all_holed.branches = {{"A", 1, 2.0, 0.5, true}};
  CHECK_THROWS_AS(tower_eigenvalue(all_holed), DomainError);
}

TEST_CASE("golden-mean Gibbs weights") {
  const auto t = golden_mean_tower();
  const double r = tower_eigenvalue(t);
  const auto nu = gibbs_measure(t, r, 6);
  CHECK(nu.weight({0}) == doctest::Approx(1.0 / oracle::kPhi).epsilon(1e-12));
  CHECK(nu.weight({1}) == doctest::Approx(1.0 / (oracle::kPhi * oracle::kPhi)).epsilon(1e-12));
  CHECK(nu.weight({0, 1}) == doctest::Approx(0.23606797749978969).epsilon(1e-12));
  CHECK(nu.return_integral == doctest::Approx(1.381966011250105).epsilon(1e-12));
  const auto single = gibbs_measure(single_branch(), 0.5, 5);
  CHECK(single.weight({0, 0, 0, 0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("Gibbs bounds hold") {
  const auto t = golden_mean_tower();
  const double r = tower_eigenvalue(t);
  const auto nu = gibbs_measure(t, r, 8);
  const auto gb = gibbs_bounds(t, r, nu, 8);
  CHECK(gb.holds);
  CHECK(gb.max_log_ratio < 1e-10);
}

TEST_CASE("Gurevich pressure") {
  const auto t = golden_mean_tower();
  const double r = tower_eigenvalue(t);
  const auto g = gurevich_pressure(t, r, 20);
  REQUIRE(g.all_periodic.size() == 20);
  for (const auto& p : g.all_periodic) CHECK(std::abs(p.value) < 1e-10);
  const auto shifted = gurevich_pressure(t, r, 20, 0.37);
  for (const auto& p : shifted.all_periodic) CHECK(p.value == doctest::Approx(0.37).epsilon(1e-10));
  TowerSpec halved = t;
  for (auto& b : halved.branches) b.J *= 2.0;
  const auto h = gurevich_pressure(halved, r, 20);
  for (const auto& p : h.all_periodic) CHECK(p.value == doctest::Approx(-oracle::kLog2).epsilon(1e-10));
}

TEST_CASE("Abramov chain") {
  const auto t = golden_mean_tower();
  const double r = tower_eigenvalue(t);
  const auto ab = abramov_check(t, gibbs_measure(t, r, 4), r);
  CHECK(ab.h_induced == doctest::Approx(0.6650183864440036).epsilon(1e-9));
  CHECK(ab.return_integral == doctest::Approx(1.381966011250105).epsilon(1e-9));
  CHECK(std::abs(ab.h_tower - oracle::kGoldenH) < 1e-9);
  CHECK(std::abs(ab.lambda_tower - oracle::kLog2) < 1e-9);
  CHECK(std::abs(ab.pressure - std::log(r)) < 1e-9);
  CHECK(ab.consistent);
}

TEST_CASE("pressure maximization") {
  const auto t = golden_mean_tower();
  const double r = tower_eigenvalue(t);
  const auto mx = pressure_maximization(t, r, 500, 9);
  CHECK(mx.exceed == 0);
  CHECK(mx.best_random <= mx.gibbs_pressure + 1e-12);
  CHECK(bernoulli_pressure(t, {1.0 / oracle::kPhi, 1.0 / (oracle::kPhi * oracle::kPhi)}) ==
        doctest::Approx(std::log(r)).epsilon(1e-12));
}

TEST_CASE("hypothesis checks") {
  CHECK(validate_hypotheses(golden_mean_tower()).all_pass());

  TowerSpec star;
  for (int n = 1; n <= 40; ++n) {
    star.branches.push_back({std::to_string(n), n, std::pow(2.0, n * n), std::pow(2.0, -n), n == 1});
  }
  star.C0 = 2.0;
  star.theta0 = 0.5;
  const auto rs = validate_hypotheses(star);
  bool flagged = false;
  for (const auto& c : rs.checks) flagged = flagged || (c.name == "condition_star" && !c.pass);
  CHECK(flagged);

  TowerSpec tail;
  for (int n = 1; n <= 40; ++n) {
    const double m = 1.0 / (n * (n + 1.0));
    tail.branches.push_back({std::to_string(n), n, 1.0 / m, m, false});
  }
  const auto rt = validate_hypotheses(tail);
  bool tail_failed = false;
  for (const auto& c : rt.checks) {
    if (c.name == "tail_bound") {
      tail_failed = !c.pass;
      CHECK(c.witness.rfind("n=2", 0) == 0);
    }
  }
  CHECK(tail_failed);
}

TEST_CASE("property: random towers are self-consistent") {
  gen::Gen g(41);
  for (int trial = 0; trial < 25; ++trial) {
    const auto t = random_tower(g);
    const double r = tower_eigenvalue(t);
    double s = 0.0;
    for (int i : t.unholed()) {
      const auto& b = t.branches[static_cast<std::size_t>(i)];
      s += std::pow(r, -b.R) / b.J;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    const auto nu = gibbs_measure(t, r, 4);
    // Kolmogorov consistency of cylinder weights.
    const int k = static_cast<int>(nu.states.size());
    for (int a = 0; a < k; ++a) {
      double sum = 0.0;
      for (int b = 0; b < k; ++b) sum += nu.weight({a, b});
      CHECK(sum == doctest::Approx(nu.weight({a})).epsilon(1e-10));
    }
    const auto ab = abramov_check(t, nu, r);
    CHECK(ab.consistent);
    const auto gur = gurevich_pressure(t, r, 12);
    for (const auto& p : gur.all_periodic) CHECK(std::abs(p.value) < 1e-10);
  }
}

TEST_CASE("tower JSON round trip and validation") {
  const auto t = golden_mean_tower();
  const auto back = tower_from_json(to_json(t));
  CHECK(to_json(back) == to_json(t));
  CHECK(tower_eigenvalue(back) == tower_eigenvalue(t));
  auto j = to_json(t);
  j["branches"][0]["J"] = 0.5;
  CHECK_THROWS_AS(tower_from_json(j), ConfigError);
  j = to_json(t);
  j["extra"] = 1;
  CHECK_THROWS_AS(tower_from_json(j), ConfigError);
}
