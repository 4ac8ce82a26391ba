#pragma once

#include "openrate/grid.hpp"
#include "openrate/open_system.hpp"

#include <Eigen/Sparse>
#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace openrate {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class UlamAssembly { exact_affine, quadrature };

/// Finite-rank approximation of the open transfer operator.
///
/// matrix(i, j) = m(B_i ∩ f^{-1}B_j ∩ (M \ H)) / m(B_i). Rows of cells lying
/// entirely in H are zero; columns are not restricted, so mass landing in a
/// hole cell is removed on the following step.
struct UlamOperator {
  Grid grid;
  SparseMatrix matrix;
  std::vector<std::size_t> hole_cells;
  std::vector<char> is_hole_cell;
  UlamAssembly assembly = UlamAssembly::quadrature;
  int subsamples = 0;
  std::vector<std::string> warnings;

  /// The matrix with hole-cell columns removed: the operator whose spectrum
  /// governs survival.
  SparseMatrix killed() const;
  /// Transfer of a cell-mass vector one step: u -> u P (removes escaping mass).
  Eigen::VectorXd push(const Eigen::VectorXd& mass) const;
  bool exact() const { return assembly == UlamAssembly::exact_affine; }
};

/// Assembles the Ulam matrix. Piecewise-affine 1D models with interval-type
/// holes use exact interval geometry; all others use a midpoint rule with
/// `subsamples` points per axis in each cell.
UlamOperator build_ulam(const OpenSystem& sys, int resolution, int subsamples = 8);

/// Dominant eigen-data of the killed Ulam operator.
struct SpectralData {
  double eigenvalue = 0.0;
  /// Density of the conditionally invariant measure as cell masses (sum 1,
  /// zero on hole cells).
  Eigen::VectorXd right;
  /// Eigenfunctional v with P v = r v, normalized so <right, left> = 1.
  Eigen::VectorXd left;
  double residual = 0.0;
  double left_residual = 0.0;
  /// |lambda_2| / r from deflated power iteration.
  double gap_estimate = 0.0;
  int iterations = 0;
  bool simple() const { return gap_estimate < 1.0 - 1e-6; }
};

SpectralData leading_eigenpair(const UlamOperator& op, double tol = 1e-12, int max_iters = 200000);

struct ConditionalInvarianceReport {
  /// L1 distance between h* and its normalized one-step push-forward.
  double push_distance = 0.0;
  /// L1 distance between the normalized surviving Lebesgue mass m^(n) and h*.
  double surviving_distance = 0.0;
  /// surviving distance for every step 1..n.
  std::vector<double> history;
};

ConditionalInvarianceReport conditionally_invariant_check(const UlamOperator& op, const SpectralData& s,
                                                          int n);

/// The survivor-set invariant measure computed as the cellwise product of
/// the two eigenvectors, cross-checked against r^{-n} ∫_{M^n} 1_B dμ*.
struct SurvivorMeasure {
  GridMeasure measure;
  /// L1 gap between the product route and the limit route.
  double discrepancy = 0.0;
  /// Step at which the limit route stabilized.
  int limit_steps = 0;
  std::vector<double> limit_route;
};

/// Throws ConvergenceError when the two routes disagree by more than
/// `agreement` in L1.
SurvivorMeasure survivor_measure(const UlamOperator& op, const SpectralData& s, double agreement = 1e-4);

/// Coordinate-triplet export: header "rows cols nnz", then "i j value" lines.
void write_triplets(std::ostream& os, const SparseMatrix& m);
SparseMatrix read_triplets(std::istream& is);

nlohmann::json spectral_to_json(const SpectralData& s);
SpectralData spectral_from_json(const nlohmann::json& j);

}  // namespace openrate
