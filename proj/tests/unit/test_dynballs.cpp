#include "gen.hpp"
#include "oracles.hpp"
#include "openrate/dynballs.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace openrate;

namespace {

OpenSystem closed_doubling() { return {make_doubling(), HoleSpec::none()}; }

}  // namespace

TEST_CASE("ball membership examples") {
  const auto sys = closed_doubling();
  CHECK(ball_member(sys, {{0.1, 0.0}, 0, BallMode::g_eps, 0.3}, {0.15, 0.0}));
  CHECK_FALSE(ball_member(sys, {{0.1, 0.0}, 3, BallMode::g_eps, 0.3}, {0.15, 0.0}));
  for (int n : {0, 5, 30}) CHECK(ball_member(sys, {{0.1, 0.0}, n, BallMode::g_eps, 0.3}, {0.1, 0.0}));
  CHECK(g_eps(sys.map, {0.2, 0.0}, 0.3) == doctest::Approx(0.1));
}

TEST_CASE("ball membership near singularities") {
  const OpenSystem baker{make_baker_map(), HoleSpec::none()};
  CHECK_THROWS_AS(ball_member(baker, {{0.25, 0.3}, 3, BallMode::g_eps, 0.1}, {0.25, 0.3}), DomainError);
  const MapModel s = synthetic_singular_model({1.0 / 3.0});
  CHECK(g_eps(s, {0.3, 0.0}, 0.3) == doctest::Approx((1.0 / 3.0 - 0.3) / 3.0));
}

TEST_CASE("doubling ball masses are (2/3) eps 2^-n") {
  const auto sys = closed_doubling();
  const double eps = 0.1;
  for (int n = 0; n <= 12; n += 3) {
    const auto m = ball_measure(sys, {{0.2371, 0.0}, n, BallMode::g_eps, eps});
    const double expect = (2.0 / 3.0) * eps * std::pow(2.0, -n);
    CHECK(std::abs(m.mass - expect) < 4.0 * m.std_error + 1e-3 * expect);
    CHECK(m.shell_hits == 0);
  }
}

TEST_CASE("ball sweep slopes") {
  BallSweepOptions opt;
  opt.n_max = 12;
  opt.fit_min = 4;
  opt.mass.samples = 3000;
  gen::Gen g(71);
  std::vector<Point> c1;
  std::vector<Point> c2;
  for (int i = 0; i < 6; ++i) {
    c1.push_back({g.uniform(), 0.0});
    c2.push_back({g.uniform(), g.uniform()});
  }
  const auto d = ball_sweep(closed_doubling(), c1, opt);
  CHECK(std::abs(d.mean_slope - oracle::kLog2) < 0.02);
  const auto c = ball_sweep({make_cat_map(), HoleSpec::none()}, c2, opt);
  CHECK(std::abs(c.mean_slope - oracle::kCatExpansion) < 0.05);
  CHECK(c.max_slope <= oracle::kCatExpansion + 0.1);
  BallSweepOptions par = opt;
  par.workers = 3;
  const auto cp = ball_sweep({make_cat_map(), HoleSpec::none()}, c2, par);
  CHECK(cp.center_slopes == c.center_slopes);
}

TEST_CASE("triangle check on random triples") {
  const MapModel s = synthetic_singular_model({1.0 / 3.0});
  for (bool adversarial : {false, true}) {
    const auto triples = random_triples(s, 100'000, 0.1, adversarial ? 2 : 1, adversarial, {1.0 / 3.0});
    const auto rep = triangle_check(s, triples, 0.1);
    CHECK(rep.checked > 90'000);
    CHECK(rep.violations == 0);
    CHECK(rep.intermediate_violations == 0);
    CHECK(rep.worst_ratio <= 1.0 + 1e-12);
  }
  const auto plain = random_triples(make_doubling(), 20'000, 0.1, 3, false);
  const auto rp = triangle_check(make_doubling(), plain, 0.1);
  CHECK(rp.violations == 0);
}

TEST_CASE("triangle check flags a broken premise") {
  const MapModel s = synthetic_singular_model({0.5});
  // d(x,z) exceeds g(x): skipped, not counted.
  const auto rep = triangle_check(s, {{{0.1, 0.0}, {0.12, 0.0}, {0.4, 0.0}}}, 0.1);
  CHECK(rep.skipped == 1);
  CHECK(rep.checked == 0);
}

TEST_CASE("separated sets grow at the entropy") {
  gen::Gen g(73);
  std::vector<Point> pts;
  for (int i = 0; i < 20'000; ++i) pts.push_back({g.uniform(), 0.0});
  const auto s = separated_set_growth(closed_doubling(), pts, 0.1, 2, 9);
  CHECK(std::abs(s.rate - oracle::kLog2) < 0.1);
  for (std::size_t i = 1; i < s.sizes.size(); ++i) CHECK(s.sizes[i].second >= s.sizes[i - 1].second);
}

TEST_CASE("ball CSV round trip") {
  BallSweepOptions opt;
  opt.n_max = 6;
  opt.fit_min = 2;
  opt.mass.samples = 1000;
  const auto sw = ball_sweep(closed_doubling(), {{0.3, 0.0}, {0.7, 0.0}}, opt);
  std::stringstream ss;
  write_ball_csv(ss, sw);
  const auto rows = read_ball_csv(ss);
  REQUIRE(rows.size() == sw.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].center_id == sw.rows[i].center_id);
    CHECK(rows[i].n == sw.rows[i].n);
    CHECK(rows[i].mass == sw.rows[i].mass);
    CHECK(rows[i].slope == sw.rows[i].slope);
  }
}
