#pragma once

#include "openrate/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace openrate {

/// One full branch of a piecewise-affine interval map: on [lo, hi) the map
/// is x -> slope * x + offset, reduced mod 1.
struct AffineBranch {
  double lo = 0.0;
  double hi = 1.0;
  double slope = 1.0;
  double offset = 0.0;
};

/// An evaluable dynamical system on [0,1), the circle or the 2-torus.
///
/// The callable members are the whole contract; the remaining fields are
/// optional structure that lets other modules take exact routes (Markov
/// coding, exact Ulam geometry, inverse branches, periodic-point seeds).
struct MapModel {
  std::string label;
  int dimension = 1;
  Topology topology = Topology::circle;

  std::function<Point(const Point&)> evaluate;
  std::function<Mat2(const Point&)> derivative;
  /// Distance to the singularity set S; +inf when S is empty.
  std::function<double(const Point&)> singularity_distance;
  /// Density of the initial distribution m w.r.t. volume.
  std::function<double(const Point&)> reference_density;

  /// Number of branches of the Markov coding (0 when the model has none).
  int alphabet = 0;
  /// Branch index of a point (first symbol of its itinerary).
  std::function<int(const Point&)> symbol;
  /// Exact piecewise-affine description; empty for nonlinear maps.
  std::vector<AffineBranch> affine_branches;
  /// All preimages of a point (1D full-branch maps and invertible maps).
  std::function<std::vector<Point>(const Point&)> preimages;
  /// Candidate periodic points of exact period `p` (validated by callers).
  std::function<std::vector<Point>(int p)> periodic_seeds;
  /// Constant log of the unstable expansion when the model is uniformly
  /// affine; 0 otherwise.
  double constant_log_expansion = 0.0;
  /// Maps that shift out binary digits (x -> 2^k x) send every double to 0
  /// after this many steps; Monte Carlo orbits are trusted only below it.
  /// 0 when rounding does not collapse orbits.
  int float_horizon = 0;

  bool has_singularities() const;
  double distance(const Point& a, const Point& b) const {
    return openrate::distance(topology, a, b);
  }
  Point wrap(const Point& p) const;
  /// log of the unstable Jacobian at p (|f'| in 1D, top singular value of
  /// Df in 2D).
  double log_unstable_jacobian(const Point& p) const;
};

/// x -> m x mod 1 on the circle.
MapModel make_madic(int m);
inline MapModel make_doubling() { return make_madic(2); }
/// x -> 4x(1-x) on [0,1]; non-Markov with respect to the grid, used for
/// diagnostics.
MapModel make_logistic();
/// Arnold cat map [[2,1],[1,1]] mod 1.
MapModel make_cat_map();
/// Baker map (x,y) -> (2x mod 1, (y + floor(2x))/2); singular along
/// x in {0, 1/2} and y = 0.
MapModel make_baker_map();

/// Factory by name as used in configs: doubling, madic (param m), triadic,
/// logistic, cat, baker.
MapModel make_model(const std::string& name, int m_param = 2);

}  // namespace openrate
