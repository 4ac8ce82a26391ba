#pragma once

#include "openrate/open_system.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace openrate {

struct TowerBranch {
  std::string id;
  int R = 1;
  /// JF^R on the branch (constant part).
  double J = 1.0;
  /// Base mass of the branch.
  double mass = 0.0;
  /// The branch falls into the hole before returning.
  bool holed = false;
};

/// Explicit Young tower with a Markov hole.
struct TowerSpec {
  std::vector<TowerBranch> branches;
  double C0 = 1.0;
  double theta0 = 0.5;
  double C1 = 0.0;
  double alpha = 0.5;
  /// Optional induced transition structure among branches (1 = allowed).
  /// Empty means the full shift.
  Eigen::MatrixXd transition;
  /// Optional distortion: the Jacobian on [i j] is J_i * exp(delta(i, j)).
  Eigen::MatrixXd distortion;

  std::vector<int> unholed() const;
  int max_return() const;
  bool full_shift() const { return transition.size() == 0 && distortion.size() == 0; }
};

/// Induced weight matrix M(r)_ij = A_ij r^{-R_i} / (J_i e^{delta_ij}) over
/// unholed branches (indices into unholed()).
Eigen::MatrixXd weight_matrix(const TowerSpec& t, double r);

/// Root of sum_{unholed} r^{-R_i} / J_i = 1, or the r at which the weighted
/// transition matrix has spectral radius 1. Throws DomainError when every
/// branch is holed.
double tower_eigenvalue(const TowerSpec& t, double tol = 1e-15);

/// Equilibrium (Gibbs) measure on the base, as a Markov chain over unholed
/// branches plus explicit cylinder weights up to `depth`.
struct TowerMeasure {
  std::vector<int> states;
  Eigen::VectorXd stationary;
  Eigen::MatrixXd chain;
  std::map<std::vector<int>, double> cylinder_weights;
  /// nu(level l) for l = 0..max R - 1, normalized over the tower.
  std::vector<double> level_masses;
  double return_integral = 0.0;

  double weight(const std::vector<int>& word) const;
};

TowerMeasure gibbs_measure(const TowerSpec& t, double r, int depth);

/// Result of comparing cylinder weights with exp(S_n phi) at every point
/// class of the cylinder.
struct GibbsBoundReport {
  double max_log_ratio = 0.0;
  double bound_constant = 1.0;
  /// Spread of the distortion across the continuation symbol.
  double measured_C1 = 0.0;
  bool holds = true;
};

/// Checks C^{-1} <= nu(Z_n) / exp(S_n phi(y)) <= C for every cylinder up to
/// `depth` and every continuation y. The bound used is C = exp(2 C1), C1 the
/// measured distortion spread.
GibbsBoundReport gibbs_bounds(const TowerSpec& t, double r, const TowerMeasure& nu, int depth);

struct PressurePoint {
  int n = 0;
  double value = 0.0;
};

struct GurevichSequence {
  /// (1/n) log of the weighted sum over all period-n words.
  std::vector<PressurePoint> all_periodic;
  /// (1/n) log of the same sum restricted to words starting in `through`.
  std::vector<PressurePoint> through_branch;
  int through = 0;
  double estimate() const { return all_periodic.empty() ? 0.0 : all_periodic.back().value; }
};

/// Potential phi = -log(r^R J) + shift.
GurevichSequence gurevich_pressure(const TowerSpec& t, double r, int n_max, double shift = 0.0, int through = 0);

struct AbramovReport {
  double h_induced = 0.0;
  double return_integral = 0.0;
  double h_tower = 0.0;
  double lambda_tower = 0.0;
  double pressure = 0.0;
  double log_r = 0.0;
  bool consistent = false;
};

AbramovReport abramov_check(const TowerSpec& t, const TowerMeasure& nu, double r, double tol = 1e-9);

/// Pressure (h - int log J) / int R of the Bernoulli measure `p` on the
/// unholed branches of a full-shift tower.
double bernoulli_pressure(const TowerSpec& t, const std::vector<double>& p);

struct MaximizationReport {
  double gibbs_pressure = 0.0;
  double best_random = -kInf;
  int draws = 0;
  int exceed = 0;
};

MaximizationReport pressure_maximization(const TowerSpec& t, double r, int draws, std::uint64_t seed);

struct CheckResult {
  std::string name;
  bool pass = true;
  std::string witness;
};

struct HypothesisOptions {
  /// Large enough for J = 2^R with thetabar = 0.95 (max of n log 2 * 0.95^n).
  double Cbar = 5.0;
  double thetabar = 0.95;
  /// (H.2) sampling when attached to a map.
  double delta = 1e-3;
  double xi1 = 2.0;
  int orbit_length = 30;
  int orbit_samples = 10'000;
  std::uint64_t seed = 7;
};

struct HypothesisReport {
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

/// Tail bound, condition (*) and the theta-bar constraint, the level-decay
/// bound, and (when `attached` is given) the approach-rate bound
/// d(f^n x, S u dH) >= delta xi1^{-n} along sampled surviving orbits.
HypothesisReport validate_hypotheses(const TowerSpec& t, const HypothesisOptions& opt = {},
                                     const OpenSystem* attached = nullptr);

/// Separation-time metric parameter beta = max(theta0, sqrt(alpha)) + 0.01,
/// clamped below 1.
double separation_beta(const TowerSpec& t);
/// d_beta between two branch words (beta^{s}, s the first disagreement).
double symbolic_distance(const TowerSpec& t, const std::vector<int>& a, const std::vector<int>& b);

/// C' with nu(level l) <= C' (theta0 / r)^l.
double level_decay_constant(const TowerSpec& t, double r, double return_integral);

TowerSpec tower_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TowerSpec& t);

/// The three-branch tower of the doubling map with hole [3/4, 1) induced on
/// [0, 1/2): branches 0 (R=1), 10 (R=2), and the holed 11.
TowerSpec golden_mean_tower();

}  // namespace openrate
