#pragma once

#include "openrate/core.hpp"

#include <cstddef>
#include <vector>

namespace openrate {

/// Uniform partition of [0,1) into `n` cells, or of the torus into n x n
/// cells (row-major, x fastest).
struct Grid {
  int dimension = 1;
  int n = 1;

  std::size_t size() const {
    return dimension == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  }
  double cell_volume() const { return 1.0 / static_cast<double>(size()); }
  double width() const { return 1.0 / n; }

  int axis_index(double v) const {
    int i = static_cast<int>(v * n);
    if (i < 0) i = 0;
    if (i >= n) i = n - 1;
    return i;
  }
  std::size_t index(const Point& p) const {
    if (dimension == 1) return static_cast<std::size_t>(axis_index(p.x));
    return static_cast<std::size_t>(axis_index(p.y)) * static_cast<std::size_t>(n) + static_cast<std::size_t>(axis_index(p.x));
  }
  /// Lower-left corner of a cell.
  Point corner(std::size_t cell) const {
    if (dimension == 1) return {static_cast<double>(cell) / n, 0.0};
    return {static_cast<double>(cell % static_cast<std::size_t>(n)) / n,
            static_cast<double>(cell / static_cast<std::size_t>(n)) / n};
  }
  Point center(std::size_t cell) const {
    Point c = corner(cell);
    c.x += 0.5 / n;
    if (dimension == 2) c.y += 0.5 / n;
    return c;
  }
};

/// Piecewise-constant measure on a Grid, stored as cell masses.
struct GridMeasure {
  Grid grid;
  std::vector<double> mass;

  static GridMeasure lebesgue(const Grid& g) {
    return {g, std::vector<double>(g.size(), g.cell_volume())};
  }
  double total() const {
    double s = 0.0;
    for (double v : mass) s += v;
    return s;
  }
  double density(std::size_t cell) const { return mass[cell] / grid.cell_volume(); }
  void normalize() {
    const double t = total();
    if (t > 0.0) {
      for (double& v : mass) v /= t;
    }
  }
};

inline double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

}  // namespace openrate
