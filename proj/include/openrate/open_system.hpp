#pragma once

#include "openrate/hole.hpp"
#include "openrate/map_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace openrate {

/// A map together with a hole. Orbits entering the hole are removed.
struct OpenSystem {
  MapModel map;
  HoleSpec hole;

  /// Distance to the boundary of H. One-dimensional holes are measured on
  /// the interval [0, 1], so 0 and 1 are distinct boundary points.
  double hole_boundary_distance(const Point& p) const {
    return hole.boundary_distance(p, map.dimension == 1 ? Topology::interval : map.topology);
  }
};

/// Orbit record returned by iterate().
struct Trajectory {
  std::vector<Point> points;
  /// First i with f^i x in H, if it happened within the horizon.
  std::optional<int> escape_step;
  /// First i at which f^i x came within the guard band of S.
  std::optional<int> singular_step;
};

/// Orbit of x up to n steps, truncated at the first entry into H or the first
/// arrival within kSingularGuard of S. Throws DomainError if x itself is on S.
Trajectory iterate(const OpenSystem& sys, const Point& x, int n);

enum class SurvivalStatus { survived, escaped, singular };

/// Outcome of following x for steps 0..n.
SurvivalStatus survival_status(const OpenSystem& sys, const Point& x, int n);

/// min{i >= 0 : f^i x in H}, or -1 if no escape within `horizon`.
/// Orbits hitting S report -2.
int survival_time(const OpenSystem& sys, const Point& x, int horizon);

enum class SingularPolicy { exclude, raise };

/// x in M^n, i.e. f^i x not in H for 0 <= i <= n. Orbits reaching S are
/// excluded from M^n by default, or raise DomainError under
/// SingularPolicy::raise.
bool survivor_indicator(const OpenSystem& sys, const Point& x, int n,
                        SingularPolicy policy = SingularPolicy::exclude);

/// First `length` symbols of the itinerary of x under the model's Markov
/// coding (computed by iterating the map).
std::vector<int> itinerary(const MapModel& map, const Point& x, int length);

/// Survivor words for a Markov hole: every n-word over the model alphabet
/// containing no forbidden level-k factor. Words are digit strings in
/// lexicographic order. Throws ConfigError if the hole is not a cylinder
/// union compatible with the model coding.
std::vector<std::string> markov_words(const OpenSystem& sys, int n);

/// Number of surviving n-words, computed by transfer-matrix powers (no
/// enumeration). Exact while the count fits in a double mantissa.
double count_markov_words(const OpenSystem& sys, int n);

/// True when `word` (digits) contains no forbidden factor of the hole.
bool word_avoids_hole(const HoleSpec& hole, const std::vector<int>& word);

}  // namespace openrate
