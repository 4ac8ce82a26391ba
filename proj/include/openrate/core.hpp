#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace openrate {

/// A point of phase space. One-dimensional models only use `x`.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

using Mat2 = Eigen::Matrix2d;

/// How coordinates wrap. Determines the metric used for balls and hole
/// boundaries.
enum class Topology { interval, circle, torus };

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Guard band around the singularity set; orbits closer than this abort.
constexpr double kSingularGuard = 1e-12;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point outside the domain of the map (on the singularity set, or invalid
/// input for an operation).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Slope fit impossible: masses underflowed or the window is empty.
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline double wrap_unit(double v) {
  double r = v - std::floor(v);
  // floor() of a value just below an integer can round r up to 1.
  return r >= 1.0 ? 0.0 : r;
}

/// Signed shortest displacement on the unit circle, in [-1/2, 1/2).
inline double circle_delta(double a, double b) {
  double d = b - a;
  d -= std::floor(d + 0.5);
  return d;
}

inline double distance(Topology topo, const Point& a, const Point& b) {
  switch (topo) {
    case Topology::interval:
      return std::abs(a.x - b.x);
    case Topology::circle:
      return std::abs(circle_delta(a.x, b.x));
    case Topology::torus:
      return std::hypot(circle_delta(a.x, b.x), circle_delta(a.y, b.y));
  }
  return kInf;
}

}  // namespace openrate
