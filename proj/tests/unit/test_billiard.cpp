#include "gen.hpp"
#include "oracles.hpp"
#include "openrate/billiard.hpp"

#include <doctest.h>

#include <cmath>

using namespace openrate;

namespace {

const BilliardTable& table() {
  static const BilliardTable t = default_table();
  return t;
}

CollisionState at_angle(int id, double angle, double theta) {
  const auto& sc = table().scatterers[static_cast<std::size_t>(id)];
  return {id, static_cast<BReal>(sc.radius * angle), static_cast<BReal>(theta)};
}

/// Mirror y -> -y: the default table is symmetric under it (lattice copies).
CollisionState mirror(const CollisionState& s) {
  const auto& sc = table().scatterers[static_cast<std::size_t>(s.id)];
  const BReal len = 2.0L * std::acos(-1.0L) * sc.radius;
  BReal r = -s.r;
  r -= len * std::floor(r / len);
  return {s.id, r, -s.theta};
}

}  // namespace

TEST_CASE("default table geometry") {
  const auto& t = table();
  CHECK(t.scatterers.size() == 2);
  CHECK(t.measured_max_flight <= t.tau_max);
  CHECK(t.validation_rays >= 1'000'000);
  CHECK(t.boundary_length() == doctest::Approx(2.0 * M_PI * (0.41 + 0.25)));
}

TEST_CASE("invalid tables are rejected") {
  CHECK_THROWS_AS(make_table({{0.0, 0.0, 0.45}, {0.5, 0.5, 0.35}}), ConfigError);
  TableOptions quick;
  quick.validation_rays = 20'000;
  CHECK_THROWS_AS(make_table({{0.0, 0.0, 0.1}}, quick), ConfigError);
}

TEST_CASE("period-2 orbit along the line of centers") {
  const auto s0 = at_angle(0, M_PI / 4.0, 0.0);
  const auto s1 = collision_map(table(), s0);
  CHECK(s1.next.id == 1);
  CHECK(std::abs(static_cast<double>(s1.next.theta)) < 1e-12);
  CHECK(static_cast<double>(s1.flight.length) == doctest::Approx(std::sqrt(0.5) - 0.41 - 0.25).epsilon(1e-12));
  const auto s2 = collision_map(table(), s1.next);
  CHECK(s2.next.id == 0);
  CHECK(state_distance(table(), s2.next, s0) < 1e-12);
}

TEST_CASE("property: mirror symmetry and speed") {
  gen::Gen g(81);
  ShardRng rng(5, 0);
  for (int k = 0; k < 2000; ++k) {
    const auto s = sample_srb(table(), rng);
    const auto a = collision_map(table(), s);
    const auto b = collision_map(table(), mirror(s));
    CHECK(std::abs(static_cast<double>(a.next.theta)) < M_PI / 2.0);
    CHECK(state_distance(table(), mirror(a.next), b.next) < 1e-9);
    const double speed = std::hypot(static_cast<double>(a.flight.vx), static_cast<double>(a.flight.vy));
    CHECK(speed == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("property: flights match brute-force ray casting") {
  ShardRng rng(6, 0);
  for (int k = 0; k < 500; ++k) {
    const auto s = sample_srb(table(), rng);
    BReal x, y, vx, vy;
    state_geometry(table(), s, x, y, vx, vy);
    double best = 1e9;
    for (std::size_t id = 0; id < table().scatterers.size(); ++id) {
      const auto& sc = table().scatterers[id];
      for (int i = -3; i <= 3; ++i) {
        for (int j = -3; j <= 3; ++j) {
          const double t = oracle::ray_circle_time(double(x), double(y), double(vx), double(vy), sc.cx + i, sc.cy + j,
                                                   sc.radius);
          if (t > 1e-9) best = std::min(best, t);
        }
      }
    }
    const auto step = collision_map(table(), s);
    CHECK(static_cast<double>(step.flight.length) == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("time reversal") {
  // Roundoff grows about e^1.4 per collision; 8 steps keep it below 1e-9.
  const auto rev = reversibility(table(), 2000, 8, 7);
  CHECK(rev.orbits > 1900);
  CHECK(rev.max_error < 1e-9);
  const CollisionState s{0, 0.3L, 0.2L};
  CHECK(static_cast<double>(time_reverse(s).theta) == doctest::Approx(-0.2));
}

TEST_CASE("SRB sampling and invariance") {
  const auto c0 = srb_stationarity(table(), 200'000, 0, 3);
  CHECK(c0.p_value > 1e-3);
  const auto c1 = srb_stationarity(table(), 200'000, 1, 4);
  CHECK(c1.p_value > 1e-3);
  CHECK(c1.dof == 399);
  // A sampler with uniform theta fails the test.
  ShardRng rng(1, 0);
  std::vector<CollisionState> bad;
  for (int i = 0; i < 100'000; ++i) {
    auto s = sample_srb(table(), rng);
    s.theta = static_cast<BReal>((rng.uniform() - 0.5) * M_PI);
    bad.push_back(s);
  }
  CHECK(srb_chi_square(table(), bad).p_value < 1e-6);
}

TEST_CASE("empty hole never escapes") {
  BilliardRunOptions opt;
  opt.samples = 20'000;
  opt.n_max = 20;
  opt.window = {5, 20};
  const auto e = billiard_escape(table(), BilliardHole::none(), opt);
  for (const auto& [n, m] : e.per_n_mass) CHECK(m == 1.0);
  CHECK(e.rho == 0.0);
}

TEST_CASE("nested holes are dominated pathwise") {
  BilliardRunOptions opt;
  opt.samples = 100'000;
  opt.n_max = 30;
  opt.window = {5, 30};
  const std::vector<BilliardHole> holes = {arc_fraction(table(), 0, 0.08), arc_fraction(table(), 0, 0.04),
                                           BilliardHole::disk(0.5, 0.0, 0.08), BilliardHole::disk(0.5, 0.0, 0.04)};
  const auto e = billiard_escape(table(), holes, opt);
  for (std::size_t n = 0; n < e[0].per_n_mass.size(); ++n) {
    CHECK(e[0].per_n_mass[n].second <= e[1].per_n_mass[n].second);
    CHECK(e[2].per_n_mass[n].second <= e[3].per_n_mass[n].second);
  }
  CHECK(e[0].rho < e[1].rho);
  CHECK(e[2].rho < e[3].rho);
  for (const auto& x : e) {
    CHECK(x.rho < 0.0);
    CHECK(x.rho > -0.2);
  }
  BilliardRunOptions par = opt;
  par.workers = 3;
  const auto p = billiard_escape(table(), holes, par);
  for (std::size_t i = 0; i < holes.size(); ++i) CHECK(p[i].per_n_mass == e[i].per_n_mass);
}

TEST_CASE("hole validation") {
  CHECK_THROWS_AS(validate_hole(table(), BilliardHole::disk(0.3, 0.0, 0.1)), ConfigError);
  CHECK_NOTHROW(validate_hole(table(), BilliardHole::disk(0.5, 0.0, 0.05)));
  CHECK_THROWS_AS(validate_hole(table(), BilliardHole::arc(3, 0.0, 0.1)), ConfigError);
  const auto h = arc_fraction(table(), 1, 0.1);
  CHECK(h.b - h.a == doctest::Approx(0.1 * 2.0 * M_PI * 0.25));
  CHECK(hole_contains_state(table(), h, at_angle(1, 0.0, 0.3)));
  CHECK_FALSE(hole_contains_state(table(), h, at_angle(1, M_PI, 0.3)));
}

TEST_CASE("fit diagnostics of an exact exponential") {
  EscapeEstimate e;
  for (int n = 0; n <= 20; ++n) e.per_n_mass.emplace_back(n, std::exp(-0.1 * n));
  e.window = {2, 20};
  fit_escape(e);
  const auto d = fit_diagnostics(e);
  CHECK(d.rms_residual < 1e-12);
  CHECK(d.ratio_spread < 1e-12);
  CHECK(d.convexity_defect < 1e-12);
}

TEST_CASE("table and hole JSON round trip") {
  const auto j = to_json(table());
  TableOptions quick;
  quick.validation_rays = 50'000;
  const auto t2 = table_from_json(j, quick);
  REQUIRE(t2.scatterers.size() == 2);
  CHECK(t2.scatterers[1].radius == table().scatterers[1].radius);
  for (const auto& h : {arc_fraction(table(), 0, 0.05), BilliardHole::disk(0.5, 0.0, 0.03)}) {
    const auto back = billiard_hole_from_json(to_json(h), table());
    CHECK(to_json(back) == to_json(h));
  }
  CHECK_THROWS_AS(billiard_hole_from_json({{"kind", "type_III"}}, table()), ConfigError);
  CHECK_THROWS_AS(billiard_hole_from_json({{"kind", "type_II"}, {"center", {0.5, 0.0}}, {"radius", 0.03}, {"x", 1}},
                                          table()),
                  ConfigError);
}
