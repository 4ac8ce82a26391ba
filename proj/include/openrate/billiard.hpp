#pragma once

#include "openrate/escape.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace openrate {

struct Scatterer {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.1;
};

/// A periodic copy of scatterer `id`, centered in absolute coordinates.
struct ScattererCopy {
  int id = 0;
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
};

/// Periodic Lorentz gas on the unit torus with circular scatterers.
struct BilliardTable {
  std::vector<Scatterer> scatterers;
  /// Per scatterer: the copies a flight of length <= tau_max can reach.
  std::vector<std::vector<ScattererCopy>> reachable;
  /// Upper bound on free flights, validated at construction.
  double tau_max = 1.5;
  /// Largest flight seen by the validation rays.
  double measured_max_flight = 0.0;
  long long validation_rays = 0;

  double boundary_length() const;
};

struct TableOptions {
  double tau_max = 1.5;
  long long validation_rays = 1'000'000;
  std::uint64_t seed = 17;
};

/// Validates disjointness (clearance >= 1e-3) and finite horizon (no
/// validation ray flies farther than tau_max). Throws ConfigError otherwise.
BilliardTable make_table(std::vector<Scatterer> scatterers, const TableOptions& opt = {});

/// Radius 0.41 at the lattice points and 0.25 at the cell centers.
BilliardTable default_table(const TableOptions& opt = {});

/// A point of collision space: arclength r on scatterer `id` (counterclockwise
/// from angle 0) and the angle theta in (-pi/2, pi/2) from the outward
/// normal to the outgoing velocity.
/// Extended precision for collision-space coordinates: the map expands
/// errors by roughly e^2 per collision.
using BReal = long double;

struct CollisionState {
  int id = 0;
  BReal r = 0.0L;
  BReal theta = 0.0L;
};

struct Flight {
  BReal x0 = 0.0L;
  BReal y0 = 0.0L;
  BReal vx = 1.0L;
  BReal vy = 0.0L;
  BReal length = 0.0L;
};

struct CollisionStep {
  CollisionState next;
  Flight flight;
  /// The new collision is within 1e-9 of tangential.
  bool tangential = false;
};

/// Next collision by exact ray-circle intersection over the periodic copies
/// within tau_max, followed by specular reflection.
CollisionStep collision_map(const BilliardTable& table, const CollisionState& s);

/// Position and outgoing velocity of a state in the base cell.
void state_geometry(const BilliardTable& table, const CollisionState& s, BReal& x, BReal& y, BReal& vx, BReal& vy);

/// (r, theta) -> (r, -theta).
CollisionState time_reverse(const CollisionState& s);

/// Distance in collision space (arclength wrap plus angle).
double state_distance(const BilliardTable& table, const CollisionState& a, const CollisionState& b);

/// Draw from the SRB measure: r uniform in arclength, density cos(theta) / 2.
CollisionState sample_srb(const BilliardTable& table, ShardRng& rng);

struct BilliardHole {
  enum class Kind { none, type_I, type_II };
  Kind kind = Kind::none;
  /// Type I: open arc (a, b) in arclength on scatterer `id`, a < b, taken
  /// mod the circumference.
  int id = 0;
  double a = 0.0;
  double b = 0.0;
  /// Type II: open disk.
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;

  static BilliardHole none() { return {}; }
  static BilliardHole arc(int id, double a, double b);
  static BilliardHole disk(double cx, double cy, double radius);
  std::string describe() const;
};

/// Type I arc of `fraction` of the circumference of scatterer `id`, centered
/// at angle `angle`.
BilliardHole arc_fraction(const BilliardTable& table, int id, double fraction, double angle = 0.0);

/// Throws ConfigError when a Type II disk comes closer than 1e-3 to a
/// scatterer or a Type I arc is outside the scatterer.
void validate_hole(const BilliardTable& table, const BilliardHole& hole);

bool hole_contains_state(const BilliardTable& table, const BilliardHole& hole, const CollisionState& s);
bool flight_crosses(const BilliardHole& hole, const Flight& f);

struct BilliardRunOptions {
  long long samples = 1'000'000;
  int n_max = 40;
  FitWindow window{10, 40};
  std::uint64_t seed = 1;
  int workers = 1;
};

/// Escape statistics for several holes from one set of trajectories
/// (nested holes therefore share sample paths). Each estimate follows the
/// Monte Carlo conventions of escape_rate_mc. A Type I hole is entered when
/// a collision lands in the arc; a Type II hole when a flight crosses the
/// disk, counted at the collision that would end the flight. Tangential
/// orbits are dropped and counted in singular_samples.
std::vector<EscapeEstimate> billiard_escape(const BilliardTable& table, const std::vector<BilliardHole>& holes,
                                            const BilliardRunOptions& opt);

EscapeEstimate billiard_escape(const BilliardTable& table, const BilliardHole& hole, const BilliardRunOptions& opt);

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 0.0;
  long long samples = 0;
};

/// Joint histogram of (arclength, sin theta) on a bins x bins grid, tested
/// against the uniform law that cos(theta) dr dtheta induces.
ChiSquare srb_chi_square(const BilliardTable& table, const std::vector<CollisionState>& states, int bins = 20);

/// Draws SRB states, applies one collision step (none if steps = 0) and
/// tests the result.
ChiSquare srb_stationarity(const BilliardTable& table, long long samples, int steps, std::uint64_t seed,
                           int workers = 1);

struct ReversibilityReport {
  double max_error = 0.0;
  long long orbits = 0;
  long long skipped = 0;
};

/// Iterates `steps` collisions, reverses, iterates back and compares.
ReversibilityReport reversibility(const BilliardTable& table, long long orbits, int steps, std::uint64_t seed);

/// Exponential-fit diagnostics of a survival curve.
struct FitDiagnostics {
  double rms_residual = 0.0;
  double max_residual = 0.0;
  /// Spread (max - min) of the one-step log survival ratio in the window.
  double ratio_spread = 0.0;
  /// Largest negative second difference of log survival (0 when the curve
  /// is log-convex in the window).
  double convexity_defect = 0.0;
};

FitDiagnostics fit_diagnostics(const EscapeEstimate& e);

nlohmann::json to_json(const BilliardTable& t);
BilliardTable table_from_json(const nlohmann::json& j, const TableOptions& base = {});
nlohmann::json to_json(const BilliardHole& h);
BilliardHole billiard_hole_from_json(const nlohmann::json& j, const BilliardTable& table);

}  // namespace openrate
