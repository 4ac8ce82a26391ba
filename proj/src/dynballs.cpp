#include "openrate/dynballs.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace openrate {

namespace {

struct CenterOrbit {
  std::vector<Point> points;
  std::vector<double> radii;
};

CenterOrbit center_orbit(const OpenSystem& sys, const BallSpec& spec) {
  CenterOrbit c;
  Point p = spec.center;
  for (int i = 0; i <= spec.n; ++i) {
    if (sys.map.singularity_distance(p) < kSingularGuard) {
      throw DomainError("ball center orbit reaches S at step " + std::to_string(i));
    }
    c.points.push_back(p);
    c.radii.push_back(ball_radius(sys.map, spec, p, i));
    if (i < spec.n) p = sys.map.evaluate(p);
  }
  return c;
}

bool member_of(const OpenSystem& sys, const BallSpec& spec, const CenterOrbit& c, Point y) {
  for (int i = 0; i <= spec.n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (sys.map.singularity_distance(y) < kSingularGuard) return false;
    if (spec.mode == BallMode::g_eps && sys.hole.contains(y)) return false;
    if (!(sys.map.distance(c.points[k], y) < c.radii[k])) return false;
    if (i < spec.n) y = sys.map.evaluate(y);
  }
  return true;
}

bool in_domain(const MapModel& map, const Point& p) {
  if (map.topology != Topology::interval) return true;
  return p.x >= 0.0 && p.x <= 1.0;
}

}  // namespace

double g_eps(const MapModel& map, const Point& x, double eps) {
  return std::min(eps, map.singularity_distance(x)) / 3.0;
}

double ball_radius(const MapModel& map, const BallSpec& spec, const Point& p, int i) {
  if (spec.mode == BallMode::star) return spec.eps * std::exp(-spec.gamma * i);
  return g_eps(map, p, spec.eps);
}

bool ball_member(const OpenSystem& sys, const BallSpec& spec, const Point& y) {
  return member_of(sys, spec, center_orbit(sys, spec), y);
}

BallMass ball_measure(const OpenSystem& sys, const BallSpec& spec, const BallMassOptions& opt, std::uint64_t stream) {
  const CenterOrbit c = center_orbit(sys, spec);
  const int d = sys.map.dimension;

  // Derivative products D_i = Df^i(x).
  std::vector<Mat2> prods{Mat2::Identity()};
  for (int i = 0; i < spec.n; ++i) prods.push_back(sys.map.derivative(c.points[static_cast<std::size_t>(i)]) * prods.back());

  Mat2 frame = Mat2::Identity();
  if (d == 2) {
    Eigen::JacobiSVD<Mat2> svd(prods.back(), Eigen::ComputeFullV);
    frame = svd.matrixV();
  }
  double half[2] = {kInf, kInf};
  for (int k = 0; k < d; ++k) {
    Eigen::Vector2d dir = d == 2 ? Eigen::Vector2d(frame.col(k)) : Eigen::Vector2d(1.0, 0.0);
    for (std::size_t i = 0; i < prods.size(); ++i) {
      const double stretch = (prods[i] * dir).head(d).norm();
      half[k] = std::min(half[k], c.radii[i] / stretch);
    }
    half[k] = std::min(opt.margin * half[k], 0.5);
  }
  const double volume = d == 2 ? 4.0 * half[0] * half[1] : 2.0 * half[0];

  ShardRng rng(opt.seed, stream);
  BallMass out;
  out.samples = opt.samples;
  double sum = 0.0;
  double sum2 = 0.0;
  const double inner = 1.0 / opt.margin;
  for (long long s = 0; s < opt.samples; ++s) {
    const double u0 = 2.0 * rng.uniform() - 1.0;
    const double u1 = d == 2 ? 2.0 * rng.uniform() - 1.0 : 0.0;
    Point y{spec.center.x + half[0] * u0 * frame(0, 0), 0.0};
    if (d == 2) {
      y.x += half[1] * u1 * frame(0, 1);
      y.y = spec.center.y + half[0] * u0 * frame(1, 0) + half[1] * u1 * frame(1, 1);
    }
    if (!in_domain(sys.map, y)) continue;
    y = sys.map.wrap(y);
    if (!member_of(sys, spec, c, y)) continue;
    const double w = sys.map.reference_density(y);
    sum += w;
    sum2 += w * w;
    ++out.hits;
    if (std::max(std::abs(u0), std::abs(u1)) > inner) ++out.shell_hits;
  }
  if (out.hits < opt.min_hits) {
    throw InsufficientSamplesError("ball_measure: " + std::to_string(out.hits) + " hits (< " +
                                   std::to_string(opt.min_hits) + "); raise samples or eps");
  }
  const double n = static_cast<double>(opt.samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum2 / n - mean * mean);
  out.mass = volume * mean;
  out.std_error = volume * std::sqrt(var / n);
  return out;
}

BallSweep ball_sweep(const OpenSystem& sys, const std::vector<Point>& centers, const BallSweepOptions& opt) {
  BallSweep sweep;
  sweep.centers = centers;
  const std::size_t nc = centers.size();
  if (nc == 0) throw DomainError("ball_sweep: no centers");
  if (opt.fit_min >= opt.n_max) throw DomainError("ball_sweep: fit range is empty");
  std::vector<std::vector<BallSweepRow>> per(nc);
  std::vector<double> slopes(nc, 0.0);
  std::vector<long long> shell(nc, 0);
  for_each_shard(nc, opt.workers, [&](std::size_t ci) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (int n = 0; n <= opt.n_max; ++n) {
      BallSpec spec{centers[ci], n, BallMode::g_eps, opt.eps, 0.0};
      const auto m = ball_measure(sys, spec, opt.mass, static_cast<std::uint64_t>(ci) * 4096 + static_cast<std::uint64_t>(n));
      shell[ci] += m.shell_hits;
      const double slope = n == 0 ? 0.0 : -std::log(m.mass) / n;
      per[ci].push_back({static_cast<int>(ci), n, m.mass, slope});
      if (n >= opt.fit_min) {
        xs.push_back(n);
        ys.push_back(-std::log(m.mass));
      }
    }
    slopes[ci] = ols_slope(xs, ys);
  });
  for (std::size_t ci = 0; ci < nc; ++ci) {
    sweep.rows.insert(sweep.rows.end(), per[ci].begin(), per[ci].end());
    sweep.shell_hits += shell[ci];
  }
  sweep.center_slopes = slopes;
  sweep.mean_slope = std::accumulate(slopes.begin(), slopes.end(), 0.0) / static_cast<double>(nc);
  sweep.max_slope = *std::max_element(slopes.begin(), slopes.end());
  double var = 0.0;
  for (double s : slopes) var += (s - sweep.mean_slope) * (s - sweep.mean_slope);
  sweep.slope_spread = std::sqrt(var / static_cast<double>(nc));
  return sweep;
}

void write_ball_csv(std::ostream& os, const BallSweep& sweep) {
  os << "center_id,n,mass,slope\n";
  char buf[128];
  for (const auto& r : sweep.rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", r.center_id, r.n, r.mass, r.slope);
    os << buf;
  }
}

std::vector<BallSweepRow> read_ball_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "center_id,n,mass,slope") {
    throw ConfigError("ball csv: unexpected header '" + line + "'");
  }
  std::vector<BallSweepRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    BallSweepRow r;
    char c1 = 0;
    char c2 = 0;
    char c3 = 0;
    std::istringstream ss(line);
    if (!(ss >> r.center_id >> c1 >> r.n >> c2 >> r.mass >> c3 >> r.slope) || c1 != ',' || c2 != ',' || c3 != ',') {
      throw ConfigError("ball csv: malformed line " + std::to_string(lineno));
    }
    rows.push_back(r);
  }
  return rows;
}

TriangleReport triangle_check(const MapModel& map, const std::vector<Triple>& triples, double eps) {
  TriangleReport rep;
  constexpr double rel = 1e-12;
  for (const auto& t : triples) {
    const double gx = g_eps(map, t.x, eps);
    const double gy = g_eps(map, t.y, eps);
    if (map.distance(t.x, t.z) > gx || map.distance(t.z, t.y) > gy) {
      ++rep.skipped;
      continue;
    }
    ++rep.checked;
    const double dxy = map.distance(t.x, t.y);
    rep.worst_ratio = std::max(rep.worst_ratio, dxy / (3.0 * gx));
    if (dxy > 3.0 * gx * (1.0 + rel)) ++rep.violations;
    const double sx = map.singularity_distance(t.x);
    if (std::isfinite(sx) && map.singularity_distance(t.y) > 2.0 * sx * (1.0 + rel)) ++rep.intermediate_violations;
  }
  return rep;
}

std::vector<Triple> random_triples(const MapModel& map, std::size_t count, double eps, std::uint64_t seed,
                                   bool adversarial, const std::vector<double>& singular_points) {
  std::vector<Triple> out(count);
  const int d = map.dimension;
  const std::size_t shards = shard_count(count);
  for (std::size_t s = 0; s < shards; ++s) {
    ShardRng rng(seed, s);
    auto offset = [&](const Point& p, double r) {
      Point q = p;
      if (d == 1) {
        q.x += r * (2.0 * rng.uniform() - 1.0);
      } else {
        const double a = 2.0 * 3.14159265358979323846 * rng.uniform();
        const double rr = r * std::sqrt(rng.uniform());
        q.x += rr * std::cos(a);
        q.y += rr * std::sin(a);
      }
      return q;
    };
    const std::size_t end = std::min(count, (s + 1) * kShardSize);
    for (std::size_t i = s * kShardSize; i < end;) {
      Point x{rng.uniform(), d == 2 ? rng.uniform() : 0.0};
      if (adversarial && !singular_points.empty()) {
        const auto k = std::min(singular_points.size() - 1,
                                static_cast<std::size_t>(rng.uniform() * static_cast<double>(singular_points.size())));
        const double dist = std::exp(std::log(1e-9) + rng.uniform() * (std::log(eps) - std::log(1e-9)));
        x.x = singular_points[k] + (rng.uniform() < 0.5 ? -dist : dist);
      }
      if (!in_domain(map, x)) continue;
      x = map.wrap(x);
      const Point z = map.wrap(offset(x, g_eps(map, x, eps)));
      if (!in_domain(map, z)) continue;
      const double reach = std::min(eps / 3.0, map.singularity_distance(z) / 2.0);
      bool found = false;
      for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
        const Point yr = offset(z, reach);
        if (!in_domain(map, yr)) continue;
        const Point y = map.wrap(yr);
        if (map.distance(z, y) <= g_eps(map, y, eps) && map.distance(x, z) <= g_eps(map, x, eps)) {
          out[i++] = {x, y, z};
          found = true;
        }
      }
    }
  }
  return out;
}

MapModel synthetic_singular_model(const std::vector<double>& points) {
  MapModel f = make_doubling();
  f.label = "synthetic";
  f.topology = Topology::interval;
  f.singularity_distance = [points](const Point& p) {
    double best = kInf;
    for (double s : points) best = std::min(best, std::abs(p.x - s));
    return best;
  };
  return f;
}

SeparatedGrowth separated_set_growth(const OpenSystem& sys, const std::vector<Point>& samples, double eps, int n_min,
                                     int n_max) {
  if (sys.map.dimension != 1) throw DomainError("separated_set_growth: one-dimensional models only");
  if (n_min < 0 || n_max <= n_min) throw DomainError("separated_set_growth: need 0 <= n_min < n_max");
  const std::size_t stride = static_cast<std::size_t>(n_max) + 1;
  std::vector<double> orbits;
  std::vector<double> radii;
  orbits.reserve(samples.size() * stride);
  for (const auto& s : samples) {
    Point p = s;
    bool ok = true;
    std::vector<double> row;
    std::vector<double> rad;
    for (int i = 0; i <= n_max; ++i) {
      if (sys.hole.contains(p) || sys.map.singularity_distance(p) < kSingularGuard) {
        ok = false;
        break;
      }
      row.push_back(p.x);
      rad.push_back(g_eps(sys.map, p, eps));
      if (i < n_max) p = sys.map.evaluate(p);
    }
    if (!ok) continue;
    orbits.insert(orbits.end(), row.begin(), row.end());
    radii.insert(radii.end(), rad.begin(), rad.end());
  }
  const std::size_t count = orbits.size() / stride;
  const bool wraps = sys.map.topology != Topology::interval;
  auto dist = [&](double a, double b) { return sys.map.distance({a, 0.0}, {b, 0.0}); };

  SeparatedGrowth out;
  std::vector<double> xs;
  std::vector<double> ys;
  for (int n = n_min; n <= n_max; ++n) {
    std::multimap<double, std::size_t> chosen;
    auto covers = [&](std::size_t c, std::size_t s) {
      for (int i = 0; i <= n; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        if (!(dist(orbits[c * stride + k], orbits[s * stride + k]) < radii[c * stride + k])) return false;
      }
      return true;
    };
    for (std::size_t s = 0; s < count; ++s) {
      const double x = orbits[s * stride];
      const double reach = eps / 3.0;
      std::vector<std::pair<double, double>> ranges{{x - reach, x + reach}};
      if (wraps && x - reach < 0.0) ranges.emplace_back(x - reach + 1.0, 1.0);
      if (wraps && x + reach > 1.0) ranges.emplace_back(0.0, x + reach - 1.0);
      bool covered = false;
      for (auto [lo, hi] : ranges) {
        for (auto it = chosen.lower_bound(lo); it != chosen.end() && it->first <= hi && !covered; ++it) {
          covered = covers(it->second, s);
        }
        if (covered) break;
      }
      if (!covered) chosen.emplace(x, s);
    }
    out.sizes.emplace_back(n, static_cast<long long>(chosen.size()));
    xs.push_back(n);
    ys.push_back(std::log(static_cast<double>(chosen.size())));
  }
  out.rate = ols_slope(xs, ys);
  return out;
}

}  // namespace openrate
