#pragma once

#include "openrate/escape.hpp"
#include "openrate/open_system.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace openrate {

enum class BallMode { g_eps, star };

/// Dynamical ball around `center` up to step n. In g_eps mode the radius at
/// step i is g(f^i x) = min(eps, d(f^i x, S)) / 3 and members must survive n
/// steps; in star mode it is eps * exp(-gamma i).
struct BallSpec {
  Point center;
  int n = 0;
  BallMode mode = BallMode::g_eps;
  double eps = 0.1;
  double gamma = 0.0;
};

/// g_eps(x) = min(eps, d(x, S)) / 3.
double g_eps(const MapModel& map, const Point& x, double eps);

/// Radius of the ball at step i around the point p = f^i(center).
double ball_radius(const MapModel& map, const BallSpec& spec, const Point& p, int i);

/// Membership of y. Orbits of y reaching S are not members. Throws
/// DomainError when the center's orbit reaches S before step n.
bool ball_member(const OpenSystem& sys, const BallSpec& spec, const Point& y);

struct BallMass {
  double mass = 0.0;
  double std_error = 0.0;
  long long hits = 0;
  long long samples = 0;
  /// Hits in the outer shell of the proposal box: a nonzero value means the
  /// box may clip the ball.
  long long shell_hits = 0;
};

struct BallMassOptions {
  long long samples = 4000;
  /// Proposal box margin over the linearized ball.
  double margin = 1.5;
  long long min_hits = 30;
  std::uint64_t seed = 5;
};

/// Reference-measure mass of the ball by importance sampling: proposals are
/// uniform in a box around the center aligned with the singular vectors of
/// Df^n, with half-widths margin * min_i r_i / s_k(Df^i). The estimator is
/// box volume times the mean of density * indicator. Throws
/// InsufficientSamplesError below `min_hits` hits.
BallMass ball_measure(const OpenSystem& sys, const BallSpec& spec, const BallMassOptions& opt = {},
                      std::uint64_t stream = 0);

struct BallSweepRow {
  int center_id = 0;
  int n = 0;
  double mass = 0.0;
  /// -(1/n) log mass (0 at n = 0).
  double slope = 0.0;
};

struct BallSweep {
  std::vector<Point> centers;
  std::vector<BallSweepRow> rows;
  /// Per center: least-squares slope of -log mass in n over the fit range.
  std::vector<double> center_slopes;
  double mean_slope = 0.0;
  double max_slope = 0.0;
  double slope_spread = 0.0;
  long long shell_hits = 0;
};

struct BallSweepOptions {
  double eps = 0.1;
  int n_max = 20;
  int fit_min = 5;
  BallMassOptions mass;
  int workers = 1;
};

/// Mass of B(x, n, g_eps) for n = 0..n_max at every center, with the slope
/// in n fitted over [fit_min, n_max]. Centers run in parallel; results do
/// not depend on the worker count.
BallSweep ball_sweep(const OpenSystem& sys, const std::vector<Point>& centers, const BallSweepOptions& opt = {});

/// CSV: center_id, n, mass, slope.
void write_ball_csv(std::ostream& os, const BallSweep& sweep);
std::vector<BallSweepRow> read_ball_csv(std::istream& is);

struct Triple {
  Point x;
  Point y;
  Point z;
};

struct TriangleReport {
  long long checked = 0;
  /// Triples not meeting d(x,z) <= g(x), d(z,y) <= g(y).
  long long skipped = 0;
  /// d(x,y) > 3 g(x).
  long long violations = 0;
  /// d(y,S) > 2 d(x,S).
  long long intermediate_violations = 0;
  double worst_ratio = 0.0;
};

/// Checks d(x,y) <= 3 g(x) and d(y,S) <= 2 d(x,S) (relative tolerance
/// 1e-12) for every triple satisfying the premise.
TriangleReport triangle_check(const MapModel& map, const std::vector<Triple>& triples, double eps);

/// Triples satisfying the premise of triangle_check. With `adversarial`, x
/// is placed at log-uniform distances 1e-9..eps from a point of S.
std::vector<Triple> random_triples(const MapModel& map, std::size_t count, double eps, std::uint64_t seed,
                                   bool adversarial, const std::vector<double>& singular_points = {});

/// A copy of the doubling map on the interval whose singularity set is the
/// given finite set of points (geometry only; the dynamics are unchanged).
MapModel synthetic_singular_model(const std::vector<double>& points);

struct SeparatedGrowth {
  /// (n, |C_n|).
  std::vector<std::pair<int, long long>> sizes;
  /// Least-squares slope of log |C_n| in n.
  double rate = 0.0;
};

/// Greedy maximal (n, g_eps)-separated subsets of `samples` for each n in
/// [n_min, n_max]: a sample joins unless it lies in B(c, n, g_eps) for some
/// chosen c. One-dimensional models only.
SeparatedGrowth separated_set_growth(const OpenSystem& sys, const std::vector<Point>& samples, double eps, int n_min,
                                     int n_max);

}  // namespace openrate
