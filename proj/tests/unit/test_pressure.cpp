#include "gen.hpp"
#include "oracles.hpp"
#include "openrate/pressure.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace openrate;

namespace {

OpenSystem golden() { return {make_doubling(), HoleSpec::cylinders(2, 2, {"11"})}; }

struct GoldenData {
  UlamOperator op;
  SpectralData sp;
  SurvivorMeasure nu;
  InvariantMeasureRep rep;
};

const GoldenData& golden_data() {
  static const GoldenData d = [] {
    GoldenData g;
    g.op = build_ulam(golden(), 64);
    g.sp = leading_eigenpair(g.op);
    g.nu = survivor_measure(g.op, g.sp);
    g.rep = grid_survivor_measure("nu_hat", golden(), g.op, g.sp, g.nu);
    return g;
  }();
  return d;
}

Eigen::MatrixXd parry() {
  Eigen::MatrixXd p(2, 2);
  p << 1.0 / oracle::kPhi, 1.0 / (oracle::kPhi * oracle::kPhi), 1.0, 0.0;
  return p;
}

}  // namespace

TEST_CASE("closed-form chain entropies") {
  CHECK(entropy_markov(digit_chain_measure("parry", 2, parry())) == doctest::Approx(oracle::kGoldenH).epsilon(1e-12));
  CHECK(entropy_markov(bernoulli_digit_measure("fair", {0.5, 0.5})) == doctest::Approx(oracle::kLog2).epsilon(1e-14));
  const auto cyc = periodic_orbit_measure("cycle", make_doubling(), {{1.0 / 3.0, 0.0}, {2.0 / 3.0, 0.0}});
  CHECK(entropy_markov(cyc) == 0.0);
  CHECK(entropy_markov(golden_data().rep) == doctest::Approx(oracle::kGoldenH).epsilon(1e-9));
}

TEST_CASE("non-stochastic chains are rejected") {
  Eigen::MatrixXd p(2, 2);
  p << 0.5, 0.4, 1.0, 0.0;
  CHECK_THROWS_AS(digit_chain_measure("bad", 2, p), DomainError);
  CHECK_THROWS_AS(periodic_orbit_measure("bad", make_doubling(), {{0.3, 0.0}, {0.5, 0.0}}), DomainError);
}

TEST_CASE("Brin-Katok entropy") {
  const auto leb = draw_samples(bernoulli_digit_measure("leb", {0.5, 0.5}), 200'000, 1);
  const auto bk = entropy_brin_katok({make_doubling(), HoleSpec::none()}, leb);
  CHECK(std::abs(bk.h - oracle::kLog2) < 0.05);
  const auto gm = draw_samples(golden_data().rep, 200'000, 2);
  const auto bg = entropy_brin_katok(golden(), gm);
  CHECK(std::abs(bg.h - oracle::kGoldenH) < 0.05);
  const std::vector<Point> atom(20'000, Point{0.0, 0.0});
  CHECK(std::abs(entropy_brin_katok({make_doubling(), HoleSpec::none()}, atom).h) < 1e-12);
}

TEST_CASE("block entropy of the golden-mean measure") {
  const auto gm = draw_samples(golden_data().rep, 100'000, 3);
  const auto b = entropy_block(golden(), gm, 2, 12);
  CHECK(std::abs(b.h - oracle::kGoldenH) < 0.02);
}

TEST_CASE("Lyapunov sums") {
  const std::vector<Point> pts = draw_samples(bernoulli_digit_measure("leb", {0.5, 0.5}), 2000, 4);
  const auto d = lyapunov_sum({make_doubling(), HoleSpec::none()}, bernoulli_digit_measure("leb", {0.5, 0.5}), 20, pts);
  CHECK(d.value == doctest::Approx(oracle::kLog2).epsilon(1e-14));
  const auto t = lyapunov_sum({make_madic(3), HoleSpec::none()}, bernoulli_digit_measure("leb3", {1. / 3, 1. / 3, 1. / 3}),
                              20, {});
  CHECK(t.value == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  gen::Gen g(5);
  std::vector<Point> torus;
  for (int i = 0; i < 500; ++i) torus.push_back({g.uniform(), g.uniform()});
  const auto c = lyapunov_sum({make_cat_map(), HoleSpec::none()}, empirical_measure("leb", torus), 30, torus);
  CHECK(std::abs(c.value - oracle::kCatExpansion) < 1e-6);
}

TEST_CASE("periodic orbits of the cat map") {
  const OpenSystem sys{make_cat_map(), HoleSpec::disk({0.31, 0.77}, 0.02)};
  const auto orbits = surviving_periodic_orbits(sys, 3, 64);
  bool found3 = false;
  for (const auto& o : orbits) {
    for (const auto& p : o) CHECK_FALSE(sys.hole.contains(p));
    if (o.size() != 3) continue;
    found3 = true;
    const auto rep = periodic_orbit_measure("p3", sys.map, o);
    const auto l = lyapunov_sum(sys, rep, 3, {});
    CHECK(std::abs(l.value - oracle::kCatExpansion) < 1e-9);
  }
  CHECK(found3);
}

TEST_CASE("class membership") {
  const auto& d = golden_data();
  const auto gm = draw_samples(d.rep, 100'000, 6);
  // The support of nu_hat stays 1/12 away from dH = {3/4, 1}.
  for (const auto& p : gm) CHECK(golden().hole_boundary_distance(p) >= 1.0 / 12.0 - 1e-12);
  const auto cf = class_membership(golden(), d.rep, gm, oracle::kLog2);
  CHECK(cf.hole.pass);
  CHECK(cf.in_GH);
  CHECK(cf.all());

  const OpenSystem half{make_doubling(), HoleSpec::cylinders(2, 1, {"1"})};
  const auto fixed = periodic_orbit_measure("zero", half.map, {{0.0, 0.0}});
  CHECK(class_membership(half, fixed, fixed.orbit, oracle::kLog2).in_GH);

  const OpenSystem third{make_doubling(), HoleSpec::intervals({{1.0 / 3.0, 0.5}})};
  const auto on_edge = periodic_orbit_measure("edge", third.map, {{1.0 / 3.0, 0.0}, {2.0 / 3.0, 0.0}});
  const auto ce = class_membership(third, on_edge, on_edge.orbit, oracle::kLog2);
  CHECK_FALSE(ce.hole.pass);
  CHECK_FALSE(ce.in_GH);
}

TEST_CASE("variational report on the golden mean") {
  const auto& d = golden_data();
  const auto esc = escape_rate_words(golden(), 60);
  std::vector<InvariantMeasureRep> cands{d.rep};
  for (const auto& o : surviving_periodic_orbits(golden(), 4, 8))
    cands.push_back(periodic_orbit_measure("p" + std::to_string(cands.size()), golden().map, o));
  cands.push_back(digit_chain_measure("parry", 2, parry()));
  VariationalOptions vo;
  vo.samples = 50'000;
  vo.expect_equality = true;
  const auto v = variational_report(golden(), cands, esc, vo);
  CHECK(v.pass());
  CHECK(v.reports.size() >= 3);
  const auto& nu = v.reports.front();
  CHECK(nu.label == "nu_hat");
  CHECK(std::abs(nu.pressure - oracle::kGoldenRho) < 1e-6);
  CHECK(std::abs(nu.gap) < 1e-6);
  for (const auto& r : v.reports) {
    CHECK(r.h <= r.lambda + 1e-9);
    CHECK(r.h >= 0.0);
  }
}

TEST_CASE("variational report on the triadic middle third") {
  const OpenSystem sys{make_madic(3), HoleSpec::cylinders(3, 1, {"1"})};
  const auto op = build_ulam(sys, 27);
  const auto sp = leading_eigenpair(op);
  const auto nu = survivor_measure(op, sp);
  const auto esc = escape_rate_grid(sys, GridMeasure::lebesgue(op.grid), 40, {}, &op);
  VariationalOptions vo;
  vo.samples = 20'000;
  vo.expect_equality = true;
  const auto v = variational_report(sys, {grid_survivor_measure("nu_hat", sys, op, sp, nu)}, esc, vo);
  CHECK(v.pass());
  CHECK(v.reports[0].pressure == doctest::Approx(std::log(2.0) - std::log(3.0)).epsilon(1e-12));
  CHECK(std::abs(v.reports[0].gap) < 1e-10);
}

TEST_CASE("cat map: period-3 measure satisfies the inequality") {
  const OpenSystem sys{make_cat_map(), HoleSpec::disk({0.31, 0.77}, 0.02)};
  McOptions mc;
  mc.samples = 200'000;
  const auto esc = escape_rate_mc(sys, uniform_sampler(2), 120, mc, {30, 120});
  std::vector<InvariantMeasureRep> cands;
  for (const auto& o : surviving_periodic_orbits(sys, 3, 16)) {
    if (o.size() == 3) cands.push_back(periodic_orbit_measure("p3_" + std::to_string(cands.size()), sys.map, o));
  }
  REQUIRE_FALSE(cands.empty());
  VariationalOptions vo;
  vo.samples = 5000;
  const auto v = variational_report(sys, cands, esc, vo);
  CHECK(v.inequality_ok);
  for (const auto& r : v.reports) {
    CHECK(r.pressure == doctest::Approx(-oracle::kCatExpansion).epsilon(1e-9));
    CHECK(r.pressure < esc.rho);
  }
}

TEST_CASE("property: stationary vectors and survivor support") {
  gen::Gen g(61);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = g.range(2, 4);
    Eigen::MatrixXd p(k, k);
    for (int i = 0; i < k; ++i) {
      const auto row = g.simplex(k, 0.05);
      for (int j = 0; j < k; ++j) p(i, j) = row[static_cast<std::size_t>(j)];
    }
    const auto rep = digit_chain_measure("chain", k, p);
    const Eigen::VectorXd pi = rep.stationary;
    const Eigen::VectorXd moved = (Eigen::MatrixXd(rep.transition).transpose() * pi);
    CHECK((moved - pi).cwiseAbs().maxCoeff() < 1e-12);
    std::vector<std::vector<double>> pv(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k)));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) pv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = p(i, j);
    CHECK(entropy_markov(rep) == doctest::Approx(oracle::markov_entropy(pv)).epsilon(1e-9));
    CHECK(entropy_markov(rep) <= std::log(k) + 1e-12);
  }
  const auto pts = draw_samples(golden_data().rep, 20'000, 8);
  for (const auto& p : pts) CHECK(survivor_indicator(golden(), p, 30));
}

TEST_CASE("samples are independent of the worker count") {
  const auto a = draw_samples(golden_data().rep, 50'000, 9, 1);
  const auto b = draw_samples(golden_data().rep, 50'000, 9, 4);
  CHECK(a == b);
}

TEST_CASE("pressure report JSON and CSV") {
  PressureReport r;
  r.label = "x";
  r.h = 0.4;
  r.lambda = 0.7;
  r.pressure = -0.3;
  r.classes.hole.alpha = kInf;
  const auto back = pressure_report_from_json(to_json(r));
  CHECK(back.label == "x");
  CHECK(back.pressure == r.pressure);
  CHECK(std::isinf(back.classes.hole.alpha));
  CHECK(to_json(back) == to_json(r));
  std::stringstream ss;
  write_pressure_csv(ss, {r});
  std::string header;
  std::getline(ss, header);
  CHECK(header == "label,kind,h,lambda,pressure,rho,gap,in_GH,in_GS,in_Gphi,inequality_ok");
}
