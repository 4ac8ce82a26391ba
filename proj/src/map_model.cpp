#include "openrate/map_model.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace openrate {

namespace {

constexpr double kPi = 3.14159265358979323846;

double circle_dist(double a, double b) { return std::abs(circle_delta(a, b)); }

long long int_pow(int base, int e) {
  long long r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Minimal period of k under k -> m k mod (m^p - 1) style maps is checked by
// the caller through floating-point iteration; here we only enumerate.
std::vector<Point> madic_seeds(int m, int p) {
  std::vector<Point> out;
  if (p <= 0) return out;
  const long long den = int_pow(m, p) - 1;
  if (den > 2'000'000) return out;
  for (long long j = 0; j < den; ++j) {
    out.push_back({static_cast<double>(j) / static_cast<double>(den), 0.0});
  }
  return out;
}

}  // namespace

bool MapModel::has_singularities() const {
  // Models advertise S through singularity_distance; probe a few points.
  for (double t : {0.0, 0.123, 0.5, 0.777}) {
    if (std::isfinite(singularity_distance({t, t}))) return true;
  }
  return false;
}

Point MapModel::wrap(const Point& p) const {
  switch (topology) {
    case Topology::interval:
      return {std::clamp(p.x, 0.0, 1.0), 0.0};
    case Topology::circle:
      return {wrap_unit(p.x), 0.0};
    case Topology::torus:
      return {wrap_unit(p.x), wrap_unit(p.y)};
  }
  return p;
}

double MapModel::log_unstable_jacobian(const Point& p) const {
  const Mat2 d = derivative(p);
  if (dimension == 1) return std::log(std::abs(d(0, 0)));
  Eigen::JacobiSVD<Mat2> svd(d);
  return std::log(svd.singularValues()(0));
}

MapModel make_madic(int m) {
  if (m < 2) throw ConfigError("m-adic map needs m >= 2");
  MapModel f;
  f.label = m == 2 ? "doubling" : (m == 3 ? "triadic" : "madic" + std::to_string(m));
  f.dimension = 1;
  f.topology = Topology::circle;
  const double md = m;
  f.evaluate = [md](const Point& p) { return Point{wrap_unit(md * p.x), 0.0}; };
  f.derivative = [md](const Point&) {
    Mat2 d = Mat2::Zero();
    d(0, 0) = md;
    return d;
  };
  f.singularity_distance = [](const Point&) { return kInf; };
  f.reference_density = [](const Point&) { return 1.0; };
  f.alphabet = m;
  f.symbol = [m, md](const Point& p) {
    return std::clamp(static_cast<int>(std::floor(md * p.x)), 0, m - 1);
  };
  for (int k = 0; k < m; ++k) {
    f.affine_branches.push_back({k / md, (k + 1) / md, md, -static_cast<double>(k)});
  }
  f.preimages = [m, md](const Point& p) {
    std::vector<Point> pre;
    pre.reserve(m);
    for (int k = 0; k < m; ++k) pre.push_back({(p.x + k) / md, 0.0});
    return pre;
  };
  f.periodic_seeds = [m](int p) { return madic_seeds(m, p); };
  f.constant_log_expansion = std::log(md);
  if ((m & (m - 1)) == 0) f.float_horizon = static_cast<int>(53.0 / std::log2(md));
  return f;
}

MapModel make_logistic() {
  MapModel f;
  f.label = "logistic";
  f.dimension = 1;
  f.topology = Topology::interval;
  f.evaluate = [](const Point& p) {
    return Point{std::clamp(4.0 * p.x * (1.0 - p.x), 0.0, 1.0), 0.0};
  };
  f.derivative = [](const Point& p) {
    Mat2 d = Mat2::Zero();
    d(0, 0) = 4.0 - 8.0 * p.x;
    return d;
  };
  f.singularity_distance = [](const Point&) { return kInf; };
  f.reference_density = [](const Point&) { return 1.0; };
  f.alphabet = 2;
  f.symbol = [](const Point& p) { return p.x < 0.5 ? 0 : 1; };
  f.preimages = [](const Point& p) {
    const double s = std::sqrt(std::max(0.0, 1.0 - p.x));
    return std::vector<Point>{{0.5 * (1.0 - s), 0.0}, {0.5 * (1.0 + s), 0.0}};
  };
  // Conjugate to the doubling map through x = sin^2(pi t).
  f.periodic_seeds = [](int p) {
    std::vector<Point> out;
    for (const Point& t : madic_seeds(2, p)) {
      const double s = std::sin(kPi * t.x);
      out.push_back({s * s, 0.0});
    }
    return out;
  };
  return f;
}

MapModel make_cat_map() {
  MapModel f;
  f.label = "cat";
  f.dimension = 2;
  f.topology = Topology::torus;
  f.evaluate = [](const Point& p) {
    return Point{wrap_unit(2.0 * p.x + p.y), wrap_unit(p.x + p.y)};
  };
  f.derivative = [](const Point&) {
    Mat2 d;
    d << 2.0, 1.0, 1.0, 1.0;
    return d;
  };
  f.singularity_distance = [](const Point&) { return kInf; };
  f.reference_density = [](const Point&) { return 1.0; };
  f.preimages = [](const Point& p) {
    return std::vector<Point>{{wrap_unit(p.x - p.y), wrap_unit(-p.x + 2.0 * p.y)}};
  };
  // Periodic points of a toral automorphism are exactly the rational points;
  // search the lattices (a/q, b/q) with exact integer arithmetic.
  f.periodic_seeds = [](int p) {
    std::vector<Point> out;
    if (p <= 0) return out;
    for (int q = 2; q <= 48 && out.size() < 256; ++q) {
      for (int a = 0; a < q; ++a) {
        for (int b = 0; b < q; ++b) {
          if (std::gcd(std::gcd(a, b), q) != 1) continue;
          int u = a;
          int v = b;
          int period = 0;
          for (int k = 1; k <= p; ++k) {
            const int nu = (2 * u + v) % q;
            const int nv = (u + v) % q;
            u = nu;
            v = nv;
            if (u == a && v == b) {
              period = k;
              break;
            }
          }
          if (period == p) out.push_back({static_cast<double>(a) / q, static_cast<double>(b) / q});
        }
      }
    }
    return out;
  };
  f.constant_log_expansion = std::log((3.0 + std::sqrt(5.0)) / 2.0);
  return f;
}

MapModel make_baker_map() {
  MapModel f;
  f.label = "baker";
  f.dimension = 2;
  f.topology = Topology::torus;
  f.evaluate = [](const Point& p) {
    const double bit = p.x < 0.5 ? 0.0 : 1.0;
    return Point{wrap_unit(2.0 * p.x), wrap_unit(0.5 * (p.y + bit))};
  };
  f.derivative = [](const Point&) {
    Mat2 d;
    d << 2.0, 0.0, 0.0, 0.5;
    return d;
  };
  f.singularity_distance = [](const Point& p) {
    return std::min({circle_dist(p.x, 0.0), circle_dist(p.x, 0.5), circle_dist(p.y, 0.0)});
  };
  f.reference_density = [](const Point&) { return 1.0; };
  f.alphabet = 2;
  f.symbol = [](const Point& p) { return p.x < 0.5 ? 0 : 1; };
  f.preimages = [](const Point& p) {
    const double bit = p.y < 0.5 ? 0.0 : 1.0;
    return std::vector<Point>{{0.5 * (p.x + bit), wrap_unit(2.0 * p.y)}};
  };
  // A periodic x-itinerary w_1..w_p pairs with y carrying the reversed word.
  f.periodic_seeds = [](int p) {
    std::vector<Point> out;
    if (p <= 0 || p > 20) return out;
    const long long den = int_pow(2, p) - 1;
    for (long long j = 0; j < den; ++j) {
      long long rev = 0;
      for (int k = 0; k < p; ++k) {
        if (j & (1LL << k)) rev |= 1LL << (p - 1 - k);
      }
      out.push_back({static_cast<double>(j) / den, static_cast<double>(rev) / den});
    }
    return out;
  };
  f.constant_log_expansion = std::log(2.0);
  f.float_horizon = 53;
  return f;
}

MapModel make_model(const std::string& name, int m_param) {
  if (name == "doubling") return make_doubling();
  if (name == "triadic") return make_madic(3);
  if (name == "madic") return make_madic(m_param);
  if (name == "logistic") return make_logistic();
  if (name == "cat") return make_cat_map();
  if (name == "baker") return make_baker_map();
  throw ConfigError("unknown map name '" + name + "'");
}

}  // namespace openrate
