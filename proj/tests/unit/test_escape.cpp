#include "gen.hpp"
#include "oracles.hpp"
#include "openrate/escape.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace openrate;

namespace {

OpenSystem golden() { return {make_doubling(), HoleSpec::cylinders(2, 2, {"11"})}; }
OpenSystem triadic() { return {make_madic(3), HoleSpec::cylinders(3, 1, {"1"})}; }

EscapeEstimate grid_estimate(const OpenSystem& sys, int res, int n_max, FitWindow w = {}) {
  const Grid g{sys.map.dimension, res};
  return escape_rate_grid(sys, GridMeasure::lebesgue(g), n_max, w);
}

void check_shape(const EscapeEstimate& e) {
  for (std::size_t i = 1; i < e.per_n_mass.size(); ++i) {
    CHECK(e.per_n_mass[i].second <= e.per_n_mass[i - 1].second * (1.0 + 1e-12));
  }
  CHECK(e.rho_lower <= e.rho);
  CHECK(e.rho <= e.rho_upper);
}

}  // namespace

TEST_CASE("triadic middle third: m(M^n) = (2/3)^(n+1)") {
  const auto e = grid_estimate(triadic(), 27, 40);
  for (const auto& [n, mass] : e.per_n_mass) CHECK(mass == doctest::Approx(oracle::triadic_mass(n)).epsilon(1e-12));
  CHECK(std::abs(e.rho - std::log(2.0 / 3.0)) < 1e-12);
  check_shape(e);
}

TEST_CASE("golden mean: grid and word routes") {
  const auto g = grid_estimate(golden(), 64, 60);
  const auto w = escape_rate_words(golden(), 60);
  CHECK(std::abs(g.rho - oracle::kGoldenRho) < 1e-6);
  CHECK(std::abs(w.rho - oracle::kGoldenRho) < 1e-6);
  for (int n = 0; n <= 14; ++n) {
    const double expect = oracle::cylinder_survivor_mass(2, {"11"}, 2, n);
    CHECK(g.per_n_mass[static_cast<std::size_t>(n)].second == doctest::Approx(expect).epsilon(1e-12));
    CHECK(w.per_n_mass[static_cast<std::size_t>(n)].second == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(word_growth_rate(golden()) == doctest::Approx(oracle::kPhi).epsilon(1e-12));
  check_shape(g);
  check_shape(w);
}

TEST_CASE("empty hole: no escape") {
  const auto e = grid_estimate({make_doubling(), HoleSpec::none()}, 16, 20);
  for (const auto& [n, mass] : e.per_n_mass) CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(e.rho) < 1e-12);
}

TEST_CASE("Monte Carlo examples") {
  McOptions mc;
  mc.samples = 1'000'000;
  const auto e = escape_rate_mc(golden(), uniform_sampler(1), 25, mc, {5, 25});
  CHECK(std::abs(e.rho - oracle::kGoldenRho) < 0.01);
  CHECK(e.std_error > 0.0);
  CHECK(std::abs(e.rho - oracle::kGoldenRho) < 5.0 * e.std_error);
  const OpenSystem half{make_doubling(), HoleSpec::cylinders(2, 1, {"1"})};
  const auto h = escape_rate_mc(half, uniform_sampler(1), 12, mc);
  CHECK(std::abs(h.rho + oracle::kLog2) < 0.02);
  check_shape(e);
}

TEST_CASE("Monte Carlo on the cat map with a small disk") {
  McOptions mc;
  mc.samples = 1'000'000;
  const OpenSystem sys{make_cat_map(), HoleSpec::disk({0.31, 0.77}, 0.02)};
  const auto e = escape_rate_mc(sys, uniform_sampler(2), 200, mc, {50, 200});
  CHECK(e.rho < 0.0);
  CHECK(e.rho > -0.05);
}

TEST_CASE("Monte Carlo respects the float horizon of the doubling map") {
  McOptions mc;
  mc.samples = 200'000;
  const auto e = escape_rate_mc(golden(), uniform_sampler(1), 80, mc);
  CHECK(e.window.n_max <= make_doubling().float_horizon - 8);
  CHECK(std::abs(e.rho - oracle::kGoldenRho) < 5.0 * e.std_error + 1e-3);
  CHECK_THROWS_AS(escape_rate_mc(golden(), uniform_sampler(1), 80, mc, {10, 70}), DomainError);
}

TEST_CASE("Monte Carlo is independent of the worker count") {
  McOptions a;
  a.samples = 100'000;
  a.seed = 42;
  McOptions b = a;
  b.workers = 3;
  const auto ea = escape_rate_mc(golden(), uniform_sampler(1), 30, a);
  const auto eb = escape_rate_mc(golden(), uniform_sampler(1), 30, b);
  CHECK(ea.rho == eb.rho);
  CHECK(ea.std_error == eb.std_error);
  CHECK(ea.per_n_mass == eb.per_n_mass);
}

TEST_CASE("property: grid and word routes agree on random cylinder holes") {
  gen::Gen g(17);
  for (int trial = 0; trial < 12; ++trial) {
    const int base = g.range(2, 3);
    const int level = g.range(1, 3);
    std::vector<std::string> words{g.word(base, level)};
    if (g.coin()) {
      auto w = g.word(base, level);
      if (w != words[0]) words.push_back(w);
    }
    const OpenSystem sys{make_madic(base), HoleSpec::cylinders(base, level, words)};
    if (word_growth_rate(sys) < 1.05) continue;
    const int res = static_cast<int>(std::pow(base, level + 1));
    // The fitted grid slope carries the subdominant transient; start late.
    const auto gr = grid_estimate(sys, res, 60, {30, 60});
    const auto wd = escape_rate_words(sys, 40);
    CHECK(std::abs(gr.rho - wd.rho) < 1e-6);
    for (int n = 0; n <= 6; ++n) {
      CHECK(wd.per_n_mass[static_cast<std::size_t>(n)].second ==
            doctest::Approx(oracle::cylinder_survivor_mass(base, words, level, n)).epsilon(1e-12));
    }
    check_shape(gr);
  }
}

TEST_CASE("property: Monte Carlo within 5 sigma of the exact rate") {
  gen::Gen g(23);
  for (int trial = 0; trial < 4; ++trial) {
    const double a = g.uniform(0.1, 0.7);
    const double b = a + g.uniform(0.05, 0.25);
    const OpenSystem sys{make_madic(3), HoleSpec::intervals({{a, b}})};
    const auto gr = grid_estimate(sys, 2187, 30);
    McOptions mc;
    mc.samples = 200'000;
    mc.seed = static_cast<std::uint64_t>(trial) + 1;
    const auto e = escape_rate_mc(sys, uniform_sampler(1), 30, mc);
    CHECK(std::abs(e.rho - gr.rho) < 5.0 * e.std_error + 2e-3);
  }
}

TEST_CASE("degenerate fits raise") {
  const OpenSystem half{make_doubling(), HoleSpec::cylinders(2, 1, {"1"})};
  CHECK_THROWS_AS(grid_estimate(half, 16, 1200, {1000, 1200}), DegenerateFitError);
  McOptions mc;
  mc.samples = 10'000;
  const OpenSystem big{make_madic(3), HoleSpec::intervals({{0.01, 0.99}})};
  CHECK_THROWS_AS(escape_rate_mc(big, uniform_sampler(1), 20, mc, {5, 20}), InsufficientSamplesError);
  CHECK_THROWS_AS(grid_estimate(golden(), 16, 10, {8, 20}), DomainError);
}

TEST_CASE("escape CSV and JSON round trip") {
  const auto e = grid_estimate(golden(), 32, 30);
  std::stringstream ss;
  write_escape_csv(ss, e);
  const auto back = read_escape_csv(ss);
  CHECK(back == e.per_n_mass);
  const auto j = escape_from_json(to_json(e));
  CHECK(j.rho == e.rho);
  CHECK(j.std_error == e.std_error);
  CHECK(j.per_n_mass == e.per_n_mass);
  CHECK(j.window.n_min == e.window.n_min);
  CHECK(to_json(j) == to_json(e));
  std::stringstream bad("x,y\n1,2\n");
  CHECK_THROWS_AS(read_escape_csv(bad), ConfigError);
}

TEST_CASE("histogram estimator") {
  // Geometric escape with ratio 1/2: half the survivors leave each step.
  const int n_max = 20;
  std::vector<long long> total(n_max + 2, 0);
  long long alive = 1LL << 30;
  for (int t = 0; t <= n_max; ++t) {
    total[static_cast<std::size_t>(t)] = alive / 2;
    alive -= alive / 2;
  }
  total[n_max + 1] = alive;
  const auto e = escape_from_histogram(total, 1LL << 30, 0, n_max, {2, 20});
  CHECK(e.rho == doctest::Approx(-oracle::kLog2).epsilon(1e-12));
}
