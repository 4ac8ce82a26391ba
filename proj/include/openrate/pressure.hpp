#pragma once

#include "openrate/escape.hpp"
#include "openrate/open_system.hpp"
#include "openrate/parallel.hpp"
#include "openrate/ulam.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace openrate {

enum class MeasureKind { markov_chain, empirical, grid };

std::string to_string(MeasureKind k);

/// A candidate invariant measure on the survivor set.
///
/// markov_chain covers two shapes: digit chains of an m-adic map (state s
/// is the digit s) and periodic orbits (state i is orbit[i], visited
/// cyclically). grid holds a cell measure together with the cell chain that
/// leaves it invariant.
struct InvariantMeasureRep {
  MeasureKind kind = MeasureKind::markov_chain;
  std::string label;
  SparseMatrix transition;
  Eigen::VectorXd stationary;
  int digit_base = 0;
  std::vector<Point> orbit;
  std::vector<Point> samples;
  GridMeasure grid;
  /// The grid chain is the exact symbolic dynamics (Markov partition).
  bool exact_chain = false;
  bool supported_in_survivor = false;
  /// Draws typical points. Empty for reps that only carry samples.
  PointSampler sampler;

  bool is_periodic() const { return !orbit.empty(); }
};

/// Stationary vector of a stochastic matrix by power iteration.
Eigen::VectorXd stationary_vector(const SparseMatrix& p, double tol = 1e-14);

/// Markov chain on the digits of an m-adic map.
InvariantMeasureRep digit_chain_measure(const std::string& label, int base, const Eigen::MatrixXd& transition);
/// Bernoulli measure on digits (zero weight digits never occur).
InvariantMeasureRep bernoulli_digit_measure(const std::string& label, const std::vector<double>& p);

/// Equidistribution on a periodic orbit. Throws DomainError if the points do
/// not form an orbit of `map` to within 1e-9.
InvariantMeasureRep periodic_orbit_measure(const std::string& label, const MapModel& map, std::vector<Point> orbit);

/// Periodic orbits of exact period 1..max_period that avoid the hole and
/// stay clear of S, found from the model's rational seeds.
std::vector<std::vector<Point>> surviving_periodic_orbits(const OpenSystem& sys, int max_period,
                                                          std::size_t max_orbits = 64);

InvariantMeasureRep empirical_measure(const std::string& label, std::vector<Point> samples);

/// The survivor-set measure from the Ulam data, with the cell chain
/// Q_ij = P_ij v_j / (r v_i). When the operator is exact for a 1D model the
/// sampler follows a chain path and composes inverse branches backwards;
/// otherwise it uses conditioned survival (see below).
InvariantMeasureRep grid_survivor_measure(const std::string& label, const OpenSystem& sys, const UlamOperator& op,
                                          const SpectralData& s, const SurvivorMeasure& nu, int burn_in = 20);

/// Draws x from `base`, keeps it if it survives 2K steps and returns f^K x.
PointSampler conditioned_survivor_sampler(const OpenSystem& sys, PointSampler base, int K);

/// Deterministic sample set of size `count` (sharded, order fixed).
std::vector<Point> draw_samples(const InvariantMeasureRep& rep, std::size_t count, std::uint64_t seed,
                                int workers = 1);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// -sum_i pi_i sum_j P_ij log P_ij. Throws DomainError if rows are not
/// stochastic to 1e-12.
double entropy_markov(const InvariantMeasureRep& rep);

struct BrinKatokOptions {
  std::vector<double> eps_list{0.1, 0.05};
  int n_max = 14;
  int base_points = 200;
  /// Slopes are fitted over [n_max / 3, n_max].
  int min_count = 30;
  std::uint64_t seed = 11;
};

struct BrinKatokResult {
  double h = 0.0;
  double std_error = 0.0;
  /// Estimate per epsilon (same order as eps_list).
  std::vector<double> per_eps;
  /// Mean log ball mass per n for the smallest epsilon.
  std::vector<double> mean_log_mass;
  int n_used = 0;
  int base_points = 0;
};

/// Entropy from dynamical balls B(x, n, g) with g = min(eps, d(x, S)),
/// measured against the empirical measure of `samples` (leave-one-out).
/// The estimate is the slope of -log mass in n.
BrinKatokResult entropy_brin_katok(const OpenSystem& sys, const std::vector<Point>& samples,
                                   const BrinKatokOptions& opt = {});

struct BlockEntropyResult {
  double h = 0.0;
  double std_error = 0.0;
  /// H_{n+1} - H_n for n = 0..
  std::vector<double> conditional;
  int n_used = 0;
};

/// Entropy from block frequencies of a finite partition (cells of a
/// q-per-axis grid) along forward orbits of `samples`. The conditional
/// entropies decrease to h; the estimate is the last reliable one.
BlockEntropyResult entropy_block(const OpenSystem& sys, const std::vector<Point>& samples, int cells_per_axis,
                                 int n_max);

struct LyapunovResult {
  double value = 0.0;
  double std_error = 0.0;
  long long near_singular = 0;
  std::vector<std::string> warnings;
};

/// Sum of positive exponents: Birkhoff average of log|f'| in 1D, top
/// exponent of the orthogonalized derivative product in 2D.
LyapunovResult lyapunov_sum(const OpenSystem& sys, const InvariantMeasureRep& rep, int n,
                            const std::vector<Point>& samples);

struct ClassFit {
  bool computed = false;
  double C = 0.0;
  /// Fitted exponent; +inf when every neighborhood mass is zero.
  double alpha = kInf;
  bool pass = false;
  bool inconclusive = false;
  std::vector<std::pair<double, double>> points;
  std::string note;
};

struct ClassFlags {
  ClassFit hole;
  ClassFit singular;
  /// (eps, nu(E_{eps,gamma})).
  std::vector<std::pair<double, double>> e_fraction;
  double gamma = 0.0;
  double c_nu = 0.0;
  bool in_GH = false;
  bool in_GS = false;
  bool in_Gphi = false;
  bool inconclusive = false;

  bool all() const { return in_GH && in_GS && in_Gphi && !inconclusive; }
};

struct ClassOptions {
  double eps_max = 1e-2;
  double eps_min = 1e-3;
  int eps_steps = 5;
  /// Horizon for the E_{eps,gamma} orbit condition.
  int horizon = 40;
  double min_alpha = 0.1;
  double min_r2 = 0.9;
};

/// Fits nu(N_eps(dH)) and nu(N_eps(S)) against C eps^alpha over a decade,
/// estimates nu(E_{eps,gamma}) with gamma = 0.05 lambda, and checks the
/// reference density on the support.
ClassFlags class_membership(const OpenSystem& sys, const InvariantMeasureRep& rep, const std::vector<Point>& samples,
                            double lambda, const ClassOptions& opt = {});

struct PressureReport {
  std::string label;
  MeasureKind kind = MeasureKind::markov_chain;
  std::string entropy_route;
  double h = 0.0;
  double h_err = 0.0;
  double lambda = 0.0;
  double lambda_err = 0.0;
  double pressure = 0.0;
  double pressure_err = 0.0;
  double rho = 0.0;
  double rho_lower = 0.0;
  double gap = 0.0;
  bool ruelle_ok = true;
  ClassFlags classes;
  /// rho_lower >= P - tolerance.
  bool inequality_ok = true;
  double tolerance = 0.0;
};

struct VariationalOptions {
  std::size_t samples = 200'000;
  std::uint64_t seed = 3;
  int workers = 1;
  int lyapunov_steps = 20;
  /// Tolerance floor for exact routes.
  double exact_tolerance = 1e-4;
  /// Check |P(nu_hat) - rho| < exact_tolerance for the rep labelled
  /// `equality_label`.
  bool expect_equality = false;
  std::string equality_label = "nu_hat";
  BrinKatokOptions brin_katok;
  int block_cells = 4;
  int block_n = 10;
  ClassOptions classes;
};

struct VariationalVerdict {
  std::vector<PressureReport> reports;
  bool inequality_ok = true;
  bool equality_ok = true;
  bool ruelle_ok = true;
  double max_pressure = -kInf;
  std::string diagnostics;
  bool pass() const { return inequality_ok && equality_ok && ruelle_ok; }
};

/// One report per candidate plus the verdict on the inequality
/// rho_lower >= P for every class-passing candidate and, optionally, the
/// equality for the survivor-set measure.
VariationalVerdict variational_report(const OpenSystem& sys, const std::vector<InvariantMeasureRep>& candidates,
                                      const EscapeEstimate& escape, const VariationalOptions& opt = {});

/// Entropy of a rep: closed form for chains, block entropy for sampled reps
/// (binary partition in 1D, q x q cells in 2D).
Estimate entropy_of(const OpenSystem& sys, const InvariantMeasureRep& rep, const std::vector<Point>& samples,
                    const VariationalOptions& opt, std::string* route = nullptr);

nlohmann::json to_json(const PressureReport& r);
PressureReport pressure_report_from_json(const nlohmann::json& j);
/// label, kind, h, lambda, pressure, rho, gap, in_GH, in_GS, in_Gphi, inequality_ok.
void write_pressure_csv(std::ostream& os, const std::vector<PressureReport>& reports);

}  // namespace openrate
