#pragma once

#include "openrate/core.hpp"

#include <string>
#include <vector>

namespace openrate {

enum class HoleKind { none, cylinder_union, interval_union, region_2d };

struct OpenInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// An open hole in phase space with structural metadata.
///
/// Membership is strict: points on the boundary are never in the hole.
/// Billiard holes (arcs and disks in the table) live in billiard.hpp because
/// membership there depends on the flight, not only on the collision point.
class HoleSpec {
 public:
  static HoleSpec none();
  /// Union of level-`level` cylinders of an `alphabet`-adic coding. Each word
  /// is a digit string, e.g. "11" for [3/4, 1) under the doubling map.
  static HoleSpec cylinders(int alphabet, int level, std::vector<std::string> words);
  static HoleSpec intervals(std::vector<OpenInterval> ivs);
  /// Open disk on the torus.
  static HoleSpec disk(Point center, double radius);
  /// Vertical strip {lo < x < hi} on the torus.
  static HoleSpec strip(double lo, double hi);

  HoleKind kind() const { return kind_; }
  bool empty() const { return kind_ == HoleKind::none; }
  bool contains(const Point& p) const;
  /// Distance to the boundary of H in the given metric.
  double boundary_distance(const Point& p, Topology topo) const;
  /// The open intervals covered by a 1D hole (cylinders are expanded).
  const std::vector<OpenInterval>& interval_list() const { return intervals_; }

  int alphabet() const { return alphabet_; }
  int level() const { return level_; }
  /// Forbidden words as digit vectors (cylinder holes only).
  const std::vector<std::vector<int>>& words() const { return words_; }
  std::vector<std::string> word_strings() const;
  Point center() const { return center_; }
  double radius() const { return radius_; }
  bool is_strip() const { return strip_; }
  std::string describe() const;

  /// True when every point of `other` lies in this hole (checked on
  /// structure, or by sampling for mixed kinds).
  bool contains_hole(const HoleSpec& other) const;

 private:
  HoleKind kind_ = HoleKind::none;
  std::vector<OpenInterval> intervals_;
  int alphabet_ = 0;
  int level_ = 0;
  std::vector<std::vector<int>> words_;
  Point center_{};
  double radius_ = 0.0;
  bool strip_ = false;
};

}  // namespace openrate
