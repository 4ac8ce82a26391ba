#include "openrate/pressure.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace openrate {

std::string to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::markov_chain:
      return "markov_chain";
    case MeasureKind::empirical:
      return "empirical";
    case MeasureKind::grid:
      return "grid";
  }
  return "markov_chain";
}

namespace {

MeasureKind measure_kind_from_string(const std::string& s) {
  if (s == "markov_chain") return MeasureKind::markov_chain;
  if (s == "empirical") return MeasureKind::empirical;
  if (s == "grid") return MeasureKind::grid;
  throw ConfigError("unknown measure kind '" + s + "'");
}

SparseMatrix to_sparse(const Eigen::MatrixXd& m) {
  SparseMatrix s = m.sparseView();
  s.makeCompressed();
  return s;
}

// Index of the first cumulative weight exceeding u * total.
std::size_t pick(const std::vector<double>& cumulative, double u) {
  const double target = u * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

struct RowSampler {
  std::vector<std::vector<std::size_t>> cols;
  std::vector<std::vector<double>> cum;

  explicit RowSampler(const SparseMatrix& p) : cols(static_cast<std::size_t>(p.rows())), cum(static_cast<std::size_t>(p.rows())) {
    for (int r = 0; r < p.outerSize(); ++r) {
      double acc = 0.0;
      for (SparseMatrix::InnerIterator it(p, r); it; ++it) {
        if (it.value() <= 0.0) continue;
        acc += it.value();
        cols[static_cast<std::size_t>(r)].push_back(static_cast<std::size_t>(it.col()));
        cum[static_cast<std::size_t>(r)].push_back(acc);
      }
    }
  }
  std::size_t next(std::size_t row, double u) const { return cols[row][pick(cum[row], u)]; }
};

std::vector<double> cumulative_of(const Eigen::VectorXd& w) {
  std::vector<double> c(static_cast<std::size_t>(w.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    acc += std::max(0.0, w(i));
    c[static_cast<std::size_t>(i)] = acc;
  }
  return c;
}

std::vector<double> log_grid(double hi, double lo, int steps) {
  std::vector<double> out;
  if (steps < 2) return {hi};
  for (int k = 0; k < steps; ++k) out.push_back(hi * std::pow(lo / hi, static_cast<double>(k) / (steps - 1)));
  return out;
}

// Boundary points of a 1D hole, endpoints shared by adjacent intervals
// removed.
std::vector<double> boundary_points_1d(const HoleSpec& hole) {
  std::vector<double> ends;
  for (const auto& iv : hole.interval_list()) {
    ends.push_back(iv.lo);
    ends.push_back(iv.hi);
  }
  std::sort(ends.begin(), ends.end());
  std::vector<double> out;
  for (std::size_t i = 0; i < ends.size(); ++i) {
    const bool shared = (i > 0 && ends[i - 1] == ends[i]) || (i + 1 < ends.size() && ends[i + 1] == ends[i]);
    if (!shared) out.push_back(ends[i]);
  }
  return out;
}

// Mass of a 1D grid measure on the union of the given intervals.
double grid_mass_1d(const GridMeasure& g, std::vector<std::pair<double, double>> ivs) {
  std::sort(ivs.begin(), ivs.end());
  std::vector<std::pair<double, double>> merged;
  for (auto [a, b] : ivs) {
    a = std::max(a, 0.0);
    b = std::min(b, 1.0);
    if (b <= a) continue;
    if (!merged.empty() && a <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, b);
    } else {
      merged.emplace_back(a, b);
    }
  }
  const double n = g.grid.n;
  double total = 0.0;
  for (auto [a, b] : merged) {
    const auto c0 = static_cast<std::size_t>(std::floor(a * n));
    const auto c1 = std::min(static_cast<std::size_t>(std::ceil(b * n)), g.mass.size());
    for (std::size_t c = c0; c < c1; ++c) {
      const double lo = std::max(a, static_cast<double>(c) / n);
      const double hi = std::min(b, static_cast<double>(c + 1) / n);
      if (hi > lo) total += g.mass[c] * (hi - lo) * n;
    }
  }
  return total;
}

ClassFit fit_neighborhood(const std::vector<std::pair<double, double>>& pts, const ClassOptions& opt) {
  ClassFit f;
  f.computed = true;
  f.points = pts;
  std::vector<double> xs;
  std::vector<double> ys;
  for (auto [e, m] : pts) {
    if (m > 0.0) {
      xs.push_back(std::log(e));
      ys.push_back(std::log(m));
    }
  }
  if (xs.empty()) {
    f.alpha = kInf;
    f.C = 0.0;
    f.pass = true;
    f.note = "no mass within the smallest neighborhood";
    return f;
  }
  if (pts.back().second == 0.0) {
    // Mass vanishes below some scale: the support keeps a positive distance.
    f.alpha = kInf;
    f.C = 0.0;
    f.pass = true;
    f.note = "mass vanishes at the smallest scales";
    return f;
  }
  if (xs.size() < 3) {
    f.inconclusive = true;
    f.note = "fewer than three nonzero neighborhood masses";
    return f;
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  f.alpha = sxy / sxx;
  f.C = std::exp(my - f.alpha * mx);
  const double r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  if (r2 < opt.min_r2) {
    f.inconclusive = true;
    f.note = "log-log fit unstable (R^2 = " + std::to_string(r2) + ")";
    return f;
  }
  f.pass = f.alpha >= opt.min_alpha;
  if (!f.pass) f.note = "exponent below " + std::to_string(opt.min_alpha);
  return f;
}

}  // namespace

Eigen::VectorXd stationary_vector(const SparseMatrix& p, double tol) {
  const Eigen::Index n = p.rows();
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const SparseMatrix pt = p.transpose();
  for (int it = 0; it < 1'000'000; ++it) {
    // Lazy step (I + P) / 2 removes periodicity without moving the fixed point.
    Eigen::VectorXd next = 0.5 * (pi + pt * pi);
    next /= next.sum();
    const double d = (next - pi).lpNorm<1>();
    pi = std::move(next);
    if (d < tol) return pi;
  }
  throw ConvergenceError("stationary_vector: no convergence");
}

InvariantMeasureRep digit_chain_measure(const std::string& label, int base, const Eigen::MatrixXd& transition) {
  if (transition.rows() != base || transition.cols() != base) {
    throw DomainError("digit_chain_measure: transition matrix must be " + std::to_string(base) + "x" + std::to_string(base));
  }
  for (Eigen::Index i = 0; i < transition.rows(); ++i) {
    if ((transition.row(i).array() < 0.0).any() || std::abs(transition.row(i).sum() - 1.0) > 1e-12) {
      throw DomainError("digit_chain_measure: row " + std::to_string(i) + " is not a probability vector");
    }
  }
  InvariantMeasureRep rep;
  rep.kind = MeasureKind::markov_chain;
  rep.label = label;
  rep.digit_base = base;
  rep.transition = to_sparse(transition);
  rep.stationary = stationary_vector(rep.transition);
  const int digits = static_cast<int>(std::ceil(56.0 / std::log2(static_cast<double>(base))));
  const auto start = cumulative_of(rep.stationary);
  const auto rows = std::make_shared<RowSampler>(rep.transition);
  rep.sampler = [=](ShardRng& rng) {
    std::vector<int> d(static_cast<std::size_t>(digits));
    std::size_t s = pick(start, rng.uniform());
    for (int k = 0; k < digits; ++k) {
      d[static_cast<std::size_t>(k)] = static_cast<int>(s);
      s = rows->next(s, rng.uniform());
    }
    double x = 0.0;
    for (int k = digits - 1; k >= 0; --k) x = (x + d[static_cast<std::size_t>(k)]) / base;
    return Point{x, 0.0};
  };
  return rep;
}

InvariantMeasureRep bernoulli_digit_measure(const std::string& label, const std::vector<double>& p) {
  const auto base = static_cast<Eigen::Index>(p.size());
  Eigen::MatrixXd t(base, base);
  for (Eigen::Index i = 0; i < base; ++i) {
    for (Eigen::Index j = 0; j < base; ++j) t(i, j) = p[static_cast<std::size_t>(j)];
  }
  t /= t.row(0).sum();
  return digit_chain_measure(label, static_cast<int>(base), t);
}

InvariantMeasureRep periodic_orbit_measure(const std::string& label, const MapModel& map, std::vector<Point> orbit) {
  if (orbit.empty()) throw DomainError("periodic_orbit_measure: empty orbit");
  const std::size_t p = orbit.size();
  for (std::size_t i = 0; i < p; ++i) {
    const Point img = map.evaluate(orbit[i]);
    if (map.distance(img, orbit[(i + 1) % p]) > 1e-9) {
      throw DomainError("periodic_orbit_measure: points of '" + label + "' do not form an orbit");
    }
  }
  InvariantMeasureRep rep;
  rep.kind = MeasureKind::markov_chain;
  rep.label = label;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>((i + 1) % p)) = 1.0;
  rep.transition = to_sparse(t);
  rep.stationary = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(p), 1.0 / static_cast<double>(p));
  rep.orbit = std::move(orbit);
  const auto pts = rep.orbit;
  rep.sampler = [pts](ShardRng& rng) {
    auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(pts.size()));
    return pts[std::min(i, pts.size() - 1)];
  };
  return rep;
}

std::vector<std::vector<Point>> surviving_periodic_orbits(const OpenSystem& sys, int max_period, std::size_t max_orbits) {
  std::vector<std::vector<Point>> out;
  if (!sys.map.periodic_seeds) return out;
  std::set<std::pair<long long, long long>> seen;
  auto key = [](const Point& p) {
    return std::make_pair(std::llround(p.x * 1e8), std::llround(p.y * 1e8));
  };
  for (int p = 1; p <= max_period && out.size() < max_orbits; ++p) {
    for (const Point& seed : sys.map.periodic_seeds(p)) {
      if (out.size() >= max_orbits) break;
      std::vector<Point> orbit{seed};
      bool ok = true;
      Point x = seed;
      for (int i = 0; i < p && ok; ++i) {
        if (sys.hole.contains(x) || sys.hole_boundary_distance(x) < 1e-9) ok = false;
        if (sys.map.singularity_distance(x) < 1e-9) ok = false;
        if (!ok) break;
        x = sys.map.evaluate(x);
        if (i + 1 < p) {
          if (sys.map.distance(x, seed) < 1e-9) ok = false;  // shorter period
          orbit.push_back(x);
        }
      }
      if (!ok || sys.map.distance(x, seed) > 1e-9) continue;
      const Point lead = *std::min_element(orbit.begin(), orbit.end(), [](const Point& a, const Point& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
      });
      if (!seen.insert(key(lead)).second) continue;
      for (const auto& q : orbit) seen.insert(key(q));
      out.push_back(std::move(orbit));
    }
  }
  return out;
}

InvariantMeasureRep empirical_measure(const std::string& label, std::vector<Point> samples) {
  if (samples.empty()) throw DomainError("empirical_measure: no samples");
  InvariantMeasureRep rep;
  rep.kind = MeasureKind::empirical;
  rep.label = label;
  rep.samples = std::move(samples);
  return rep;
}

PointSampler conditioned_survivor_sampler(const OpenSystem& sys, PointSampler base, int K) {
  return [sys, base, K](ShardRng& rng) {
    for (int attempt = 0; attempt < 10'000'000; ++attempt) {
      Point x = base(rng);
      Point mid{};
      bool ok = true;
      for (int i = 0; i <= 2 * K; ++i) {
        if (sys.hole.contains(x) || sys.map.singularity_distance(x) < kSingularGuard) {
          ok = false;
          break;
        }
        if (i == K) mid = x;
        if (i < 2 * K) x = sys.map.evaluate(x);
      }
      if (ok) return mid;
    }
    throw InsufficientSamplesError("conditioned_survivor_sampler: no survivor in 10^7 attempts");
  };
}

InvariantMeasureRep grid_survivor_measure(const std::string& label, const OpenSystem& sys, const UlamOperator& op,
                                          const SpectralData& s, const SurvivorMeasure& nu, int burn_in) {
  InvariantMeasureRep rep;
  rep.kind = MeasureKind::grid;
  rep.label = label;
  rep.grid = nu.measure;
  rep.supported_in_survivor = true;
  const SparseMatrix k = op.killed();
  const Eigen::VectorXd& v = s.left;
  std::vector<Eigen::Triplet<double>> trips;
  bool uniform = sys.map.alphabet > 0;
  const double branch = sys.map.alphabet > 0 ? 1.0 / sys.map.alphabet : 0.0;
  for (int r = 0; r < k.outerSize(); ++r) {
    if (!(v(r) > 0.0)) continue;
    std::vector<std::pair<int, double>> row;
    double sum = 0.0;
    for (SparseMatrix::InnerIterator it(k, r); it; ++it) {
      const double q = it.value() * v(it.col()) / (s.eigenvalue * v(r));
      if (q <= 0.0) continue;
      if (std::abs(it.value() - branch) > 1e-13) uniform = false;
      row.emplace_back(static_cast<int>(it.col()), q);
      sum += q;
    }
    for (auto [c, q] : row) trips.emplace_back(r, c, q / sum);
  }
  rep.transition.resize(k.rows(), k.cols());
  rep.transition.setFromTriplets(trips.begin(), trips.end());
  rep.transition.makeCompressed();
  rep.stationary = Eigen::Map<const Eigen::VectorXd>(nu.measure.mass.data(), static_cast<Eigen::Index>(nu.measure.mass.size()));
  rep.exact_chain = uniform;

  if (uniform && sys.map.dimension == 1 && sys.map.preimages) {
    const auto start = cumulative_of(rep.stationary);
    const auto rows = std::make_shared<RowSampler>(rep.transition);
    const Grid grid = op.grid;
    const MapModel map = sys.map;
    const int length = static_cast<int>(std::ceil(60.0 / std::log2(static_cast<double>(map.alphabet))));
    rep.sampler = [=](ShardRng& rng) {
      std::vector<std::size_t> path(static_cast<std::size_t>(length) + 1);
      path[0] = pick(start, rng.uniform());
      for (int i = 0; i < length; ++i) path[static_cast<std::size_t>(i) + 1] = rows->next(path[static_cast<std::size_t>(i)], rng.uniform());
      Point y{grid.corner(path.back()).x + rng.uniform() * grid.width(), 0.0};
      for (int i = length - 1; i >= 0; --i) {
        const auto target = path[static_cast<std::size_t>(i)];
        const double mid = grid.center(target).x;
        Point best = y;
        double best_d = kInf;
        for (const Point& pre : map.preimages(y)) {
          const double d = grid.index(pre) == target ? -1.0 : std::abs(pre.x - mid);
          if (d < best_d) {
            best_d = d;
            best = pre;
          }
        }
        y = best;
      }
      return y;
    };
  } else {
    rep.sampler = conditioned_survivor_sampler(sys, uniform_sampler(sys.map.dimension), burn_in);
  }
  return rep;
}

std::vector<Point> draw_samples(const InvariantMeasureRep& rep, std::size_t count, std::uint64_t seed, int workers) {
  if (rep.is_periodic()) return rep.orbit;
  if (!rep.sampler) {
    std::vector<Point> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count && !rep.samples.empty(); ++i) out.push_back(rep.samples[i % rep.samples.size()]);
    return out;
  }
  std::vector<Point> out(count);
  const std::size_t shards = shard_count(count);
  for_each_shard(shards, workers, [&](std::size_t s) {
    ShardRng rng(seed, s);
    const std::size_t begin = s * kShardSize;
    const std::size_t end = std::min(begin + kShardSize, count);
    for (std::size_t i = begin; i < end; ++i) out[i] = rep.sampler(rng);
  });
  return out;
}

double entropy_markov(const InvariantMeasureRep& rep) {
  if (rep.transition.rows() == 0) throw DomainError("entropy_markov: '" + rep.label + "' has no transition matrix");
  double h = 0.0;
  for (int r = 0; r < rep.transition.outerSize(); ++r) {
    const double pi = rep.stationary(r);
    double row = 0.0;
    double acc = 0.0;
    for (SparseMatrix::InnerIterator it(rep.transition, r); it; ++it) {
      const double q = it.value();
      row += q;
      if (q > 0.0) acc -= q * std::log(q);
    }
    if (pi > 0.0 && std::abs(row - 1.0) > 1e-12) {
      throw DomainError("entropy_markov: row " + std::to_string(r) + " of '" + rep.label + "' sums to " +
                        std::to_string(row));
    }
    h += pi * acc;
  }
  return std::max(0.0, h);
}

BrinKatokResult entropy_brin_katok(const OpenSystem& sys, const std::vector<Point>& samples, const BrinKatokOptions& opt) {
  const std::size_t n_samples = samples.size();
  if (n_samples < 1000) throw InsufficientSamplesError("entropy_brin_katok: need at least 1000 samples");
  if (opt.eps_list.empty()) throw DomainError("entropy_brin_katok: empty epsilon list");
  BrinKatokResult res;
  const int n_max = opt.n_max;
  const bool wraps = sys.map.topology != Topology::interval;

  std::vector<std::size_t> order(n_samples);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return samples[a].x < samples[b].x; });
  std::vector<double> xs(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) xs[i] = samples[order[i]].x;

  const std::size_t bases = std::min<std::size_t>(static_cast<std::size_t>(opt.base_points), n_samples);
  std::vector<std::vector<Point>> base_orbits(bases);
  for (std::size_t b = 0; b < bases; ++b) {
    Point p = samples[b];
    for (int i = 0; i <= n_max; ++i) {
      base_orbits[b].push_back(p);
      p = sys.map.evaluate(p);
    }
  }
  auto gate = [&](const Point& p, double eps) { return std::min(eps, sys.map.singularity_distance(p)); };

  std::vector<double> per_point_estimates;
  for (double eps : opt.eps_list) {
    // counts[b][n]: other samples that stay close through step n.
    std::vector<std::vector<long long>> counts(bases, std::vector<long long>(static_cast<std::size_t>(n_max) + 1, 0));
    for (std::size_t b = 0; b < bases; ++b) {
      const auto& orb = base_orbits[b];
      const double g0 = gate(orb[0], eps);
      std::vector<std::pair<double, double>> ranges{{orb[0].x - g0, orb[0].x + g0}};
      if (wraps && orb[0].x - g0 < 0.0) ranges.emplace_back(orb[0].x - g0 + 1.0, 1.0);
      if (wraps && orb[0].x + g0 > 1.0) ranges.emplace_back(0.0, orb[0].x + g0 - 1.0);
      for (auto [lo, hi] : ranges) {
        auto first = std::lower_bound(xs.begin(), xs.end(), lo) - xs.begin();
        auto last = std::upper_bound(xs.begin(), xs.end(), hi) - xs.begin();
        for (auto idx = first; idx < last; ++idx) {
          const std::size_t j = order[static_cast<std::size_t>(idx)];
          if (j == b) continue;
          Point y = samples[j];
          for (int i = 0; i <= n_max; ++i) {
            if (sys.hole.contains(y)) break;
            if (sys.map.distance(orb[static_cast<std::size_t>(i)], y) >= gate(orb[static_cast<std::size_t>(i)], eps)) break;
            ++counts[b][static_cast<std::size_t>(i)];
            if (i < n_max) y = sys.map.evaluate(y);
          }
        }
      }
    }
    // Largest n at which 90% of centers still have enough neighbors.
    int n_used = -1;
    for (int n = 0; n <= n_max; ++n) {
      std::size_t ok = 0;
      for (std::size_t b = 0; b < bases; ++b) ok += counts[b][static_cast<std::size_t>(n)] >= opt.min_count ? 1 : 0;
      if (ok * 10 >= bases * 9) n_used = n;
    }
    if (n_used < 3) {
      throw InsufficientSamplesError("entropy_brin_katok: ball counts fall below " + std::to_string(opt.min_count) +
                                     " before n = 3 at eps = " + std::to_string(eps));
    }
    const int n_lo = std::max(1, n_used / 3);
    std::vector<double> slopes;
    std::vector<double> mean_log(static_cast<std::size_t>(n_used) + 1, 0.0);
    std::size_t used = 0;
    for (std::size_t b = 0; b < bases; ++b) {
      if (counts[b][static_cast<std::size_t>(n_used)] < opt.min_count) continue;
      std::vector<double> nx;
      std::vector<double> ly;
      for (int n = n_lo; n <= n_used; ++n) {
        nx.push_back(n);
        ly.push_back(std::log(static_cast<double>(counts[b][static_cast<std::size_t>(n)]) / static_cast<double>(n_samples - 1)));
      }
      for (int n = 0; n <= n_used; ++n) {
        mean_log[static_cast<std::size_t>(n)] +=
            std::log(static_cast<double>(std::max<long long>(1, counts[b][static_cast<std::size_t>(n)])) / static_cast<double>(n_samples - 1));
      }
      slopes.push_back(-ols_slope(nx, ly));
      ++used;
    }
    for (double& m : mean_log) m /= static_cast<double>(used);
    const double mean = std::accumulate(slopes.begin(), slopes.end(), 0.0) / static_cast<double>(slopes.size());
    double var = 0.0;
    for (double s : slopes) var += (s - mean) * (s - mean);
    var /= static_cast<double>(std::max<std::size_t>(1, slopes.size() - 1));
    res.per_eps.push_back(mean);
    res.std_error = std::sqrt(var / static_cast<double>(slopes.size()));
    res.mean_log_mass = mean_log;
    res.n_used = n_used;
    res.base_points = static_cast<int>(used);
  }
  res.h = res.per_eps.back();
  if (res.per_eps.size() >= 2) {
    const double sys_err = 0.5 * std::abs(res.per_eps.back() - res.per_eps[res.per_eps.size() - 2]);
    res.std_error = std::hypot(res.std_error, sys_err);
  }
  return res;
}

BlockEntropyResult entropy_block(const OpenSystem& sys, const std::vector<Point>& samples, int cells_per_axis, int n_max) {
  const Grid part{sys.map.dimension, cells_per_axis};
  const auto alphabet = static_cast<std::uint64_t>(part.size());
  const int length = n_max + 1;
  if (std::pow(static_cast<double>(alphabet), length) > 1.8e19) throw DomainError("entropy_block: words do not fit 64 bits");
  const std::size_t n = samples.size();
  if (n < 1000) throw InsufficientSamplesError("entropy_block: need at least 1000 samples");
  std::vector<std::uint64_t> words;
  words.reserve(n);
  for (const Point& s : samples) {
    Point p = s;
    std::uint64_t code = 0;
    bool ok = true;
    for (int i = 0; i < length; ++i) {
      if (sys.hole.contains(p)) {
        ok = false;
        break;
      }
      code = code * alphabet + part.index(p);
      if (i + 1 < length) p = sys.map.evaluate(p);
    }
    if (ok) words.push_back(code);
  }
  if (words.size() < 1000) throw InsufficientSamplesError("entropy_block: too few surviving orbits");
  std::sort(words.begin(), words.end());
  const double total = static_cast<double>(words.size());
  std::vector<double> H(static_cast<std::size_t>(length) + 1, 0.0);
  std::vector<std::size_t> distinct(static_cast<std::size_t>(length) + 1, 1);
  std::uint64_t div = 1;
  for (int l = length; l >= 1; --l) {
    double h = 0.0;
    std::size_t d = 0;
    std::size_t run = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
      ++run;
      if (i + 1 == words.size() || words[i + 1] / div != words[i] / div) {
        const double p = static_cast<double>(run) / total;
        h -= p * std::log(p);
        ++d;
        run = 0;
      }
    }
    H[static_cast<std::size_t>(l)] = h;
    distinct[static_cast<std::size_t>(l)] = d;
    div *= alphabet;
  }
  BlockEntropyResult res;
  for (int l = 0; l < length; ++l) {
    res.conditional.push_back(H[static_cast<std::size_t>(l) + 1] - H[static_cast<std::size_t>(l)]);
  }
  // Reliable while the number of distinct words stays far below the sample
  // count.
  int used = 0;
  for (int l = 1; l < length; ++l) {
    if (static_cast<double>(distinct[static_cast<std::size_t>(l) + 1]) * 50.0 <= total) used = l;
  }
  if (used < 2) throw InsufficientSamplesError("entropy_block: too few samples for words of length 3");
  res.n_used = used;
  res.h = res.conditional[static_cast<std::size_t>(used)];
  const double drift = std::abs(res.conditional[static_cast<std::size_t>(used)] - res.conditional[static_cast<std::size_t>(used) - 1]);
  const double bias = static_cast<double>(distinct[static_cast<std::size_t>(used) + 1]) / (2.0 * total);
  res.std_error = std::hypot(drift, bias);
  return res;
}

LyapunovResult lyapunov_sum(const OpenSystem& sys, const InvariantMeasureRep& rep, int n, const std::vector<Point>& samples) {
  LyapunovResult res;
  const MapModel& map = sys.map;
  auto near = [&](const Point& p) {
    if (map.singularity_distance(p) < 1e-6) ++res.near_singular;
  };
  if (rep.is_periodic()) {
    if (map.dimension == 1) {
      double s = 0.0;
      for (const auto& p : rep.orbit) {
        near(p);
        s += map.log_unstable_jacobian(p);
      }
      res.value = s / static_cast<double>(rep.orbit.size());
    } else {
      Mat2 prod = Mat2::Identity();
      double log_scale = 0.0;
      for (const auto& p : rep.orbit) {
        near(p);
        prod = map.derivative(p) * prod;
        const double s = prod.cwiseAbs().maxCoeff();
        prod /= s;
        log_scale += std::log(s);
      }
      Eigen::EigenSolver<Mat2> es(prod, false);
      const double top = std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(1)));
      res.value = std::max(0.0, (log_scale + std::log(top)) / static_cast<double>(rep.orbit.size()));
    }
  } else if (map.constant_log_expansion > 0.0) {
    res.value = map.constant_log_expansion;
  } else {
    if (samples.empty()) throw DomainError("lyapunov_sum: no samples for '" + rep.label + "'");
    std::vector<double> per;
    per.reserve(samples.size());
    for (const auto& s : samples) {
      Point p = s;
      double acc = 0.0;
      Eigen::Vector2d v(1.0, 0.3);
      v.normalize();
      for (int i = 0; i < n; ++i) {
        near(p);
        if (map.dimension == 1) {
          acc += map.log_unstable_jacobian(p);
        } else {
          v = map.derivative(p) * v;
          const double len = v.norm();
          acc += std::log(len);
          v /= len;
        }
        p = map.evaluate(p);
      }
      per.push_back(acc / n);
    }
    const double mean = std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
    double var = 0.0;
    for (double x : per) var += (x - mean) * (x - mean);
    var /= static_cast<double>(std::max<std::size_t>(1, per.size() - 1));
    res.value = std::max(0.0, mean);
    res.std_error = std::sqrt(var / static_cast<double>(per.size()));
  }
  if (res.near_singular > 0) {
    res.warnings.push_back("singularity-proximity: " + std::to_string(res.near_singular) +
                           " orbit points within 1e-6 of S");
  }
  return res;
}

ClassFlags class_membership(const OpenSystem& sys, const InvariantMeasureRep& rep, const std::vector<Point>& samples,
                            double lambda, const ClassOptions& opt) {
  ClassFlags flags;
  const auto eps = log_grid(opt.eps_max, opt.eps_min, opt.eps_steps);
  const bool singular = sys.map.has_singularities();
  const std::vector<Point>& pts = rep.is_periodic() ? rep.orbit : samples;
  if (pts.empty()) throw DomainError("class_membership: no points for '" + rep.label + "'");
  const double npts = static_cast<double>(pts.size());

  std::vector<double> dh(pts.size());
  std::vector<double> ds(pts.size(), kInf);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    dh[i] = sys.hole.empty() ? kInf : sys.hole_boundary_distance(pts[i]);
    if (singular) ds[i] = sys.map.singularity_distance(pts[i]);
  }
  auto fraction_below = [&](const std::vector<double>& d, double e) {
    double c = 0.0;
    for (double v : d) c += v < e ? 1.0 : 0.0;
    return c / npts;
  };

  // Neighborhood of the hole boundary.
  std::vector<std::pair<double, double>> hole_pts;
  const bool grid_1d = rep.kind == MeasureKind::grid && sys.map.dimension == 1 && !rep.grid.mass.empty();
  const auto bpts = sys.map.dimension == 1 ? boundary_points_1d(sys.hole) : std::vector<double>{};
  for (double e : eps) {
    double m = 0.0;
    if (sys.hole.empty()) {
      m = 0.0;
    } else if (grid_1d) {
      std::vector<std::pair<double, double>> ivs;
      for (double b : bpts) ivs.emplace_back(b - e, b + e);
      m = grid_mass_1d(rep.grid, ivs);
    } else {
      m = fraction_below(dh, e);
    }
    hole_pts.emplace_back(e, m);
  }
  if (rep.is_periodic()) {
    flags.hole.computed = true;
    flags.hole.points = hole_pts;
    const double dmin = *std::min_element(dh.begin(), dh.end());
    flags.hole.pass = dmin > 1e-9;
    flags.hole.alpha = flags.hole.pass ? kInf : 0.0;
    flags.hole.note = "orbit distance to the hole boundary " + std::to_string(dmin);
  } else {
    flags.hole = fit_neighborhood(hole_pts, opt);
  }

  if (singular) {
    std::vector<std::pair<double, double>> sing_pts;
    for (double e : eps) sing_pts.emplace_back(e, fraction_below(ds, e));
    if (rep.is_periodic()) {
      flags.singular.computed = true;
      flags.singular.points = sing_pts;
      const double dmin = *std::min_element(ds.begin(), ds.end());
      flags.singular.pass = dmin > 1e-9;
      flags.singular.alpha = flags.singular.pass ? kInf : 0.0;
    } else {
      flags.singular = fit_neighborhood(sing_pts, opt);
    }
  } else {
    flags.singular.pass = true;
    flags.singular.note = "S is empty";
  }

  // E_{eps,gamma}: orbits keeping distance eps e^{-gamma i} from dH and S.
  flags.gamma = 0.05 * lambda;
  std::vector<double> q(pts.size(), kInf);
  const int horizon = rep.is_periodic() ? static_cast<int>(rep.orbit.size()) * 4 : opt.horizon;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    Point p = pts[k];
    double best = kInf;
    for (int i = 0; i <= horizon; ++i) {
      if (sys.hole.contains(p)) {
        best = 0.0;
        break;
      }
      double d = sys.hole.empty() ? kInf : sys.hole_boundary_distance(p);
      if (singular) d = std::min(d, sys.map.singularity_distance(p));
      best = std::min(best, d * std::exp(flags.gamma * i));
      if (singular && sys.map.singularity_distance(p) < kSingularGuard) break;
      if (i < horizon) p = sys.map.evaluate(p);
    }
    q[k] = best;
  }
  for (double e : log_grid(1e-2, 1e-6, 5)) {
    double c = 0.0;
    for (double v : q) c += v >= e ? 1.0 : 0.0;
    flags.e_fraction.emplace_back(e, c / npts);
  }
  const double e_last = flags.e_fraction.back().second;
  const bool e_ok = e_last >= 0.95 && e_last + 0.02 >= flags.e_fraction.front().second;

  // Reference density on the support.
  double cmin = kInf;
  for (const auto& p : pts) cmin = std::min(cmin, sys.map.reference_density(p));
  flags.c_nu = cmin;
  flags.in_Gphi = cmin > 0.0;

  flags.in_GH = flags.hole.pass && e_ok;
  flags.in_GS = flags.singular.pass;
  flags.inconclusive = flags.hole.inconclusive || flags.singular.inconclusive || (flags.hole.pass && !e_ok);
  return flags;
}

Estimate entropy_of(const OpenSystem& sys, const InvariantMeasureRep& rep, const std::vector<Point>& samples,
                    const VariationalOptions& opt, std::string* route) {
  Estimate e;
  const bool chain = rep.kind == MeasureKind::markov_chain || (rep.kind == MeasureKind::grid && rep.exact_chain);
  if (chain) {
    e.value = entropy_markov(rep);
    if (route) *route = rep.is_periodic() ? "periodic" : "markov";
    return e;
  }
  const int cells = sys.map.dimension == 1 ? 2 : opt.block_cells;
  const auto b = entropy_block(sys, samples, cells, opt.block_n);
  e.value = b.h;
  e.std_error = b.std_error;
  if (route) *route = "block";
  return e;
}

VariationalVerdict variational_report(const OpenSystem& sys, const std::vector<InvariantMeasureRep>& candidates,
                                      const EscapeEstimate& escape, const VariationalOptions& opt) {
  VariationalVerdict verdict;
  std::ostringstream diag;
  const bool mc = escape.method == EscapeMethod::monte_carlo;

  // Uncertainty of rho_lower: the local slope at its argmin (Monte Carlo) or
  // the fit error.
  double sigma_lower = escape.std_error;
  if (mc && escape.samples > 0) {
    for (std::size_t i = 1; i < escape.per_n_mass.size(); ++i) {
      const int n = escape.per_n_mass[i].first;
      if (n <= escape.window.n_min || n > escape.window.n_max) continue;
      if (local_slope(escape, i) == escape.rho_lower) {
        const double pn = escape.per_n_mass[i].second;
        const double pm = escape.per_n_mass[i - 1].second;
        const double nv = static_cast<double>(escape.samples - escape.singular_samples);
        sigma_lower = std::sqrt(std::max(0.0, (1.0 / pn - 1.0 / pm) / nv));
      }
    }
  }

  std::uint64_t seed = opt.seed;
  for (const auto& rep : candidates) {
    PressureReport r;
    r.label = rep.label;
    r.kind = rep.kind;
    const auto samples = draw_samples(rep, opt.samples, seed++, opt.workers);
    const auto h = entropy_of(sys, rep, samples, opt, &r.entropy_route);
    r.h = h.value;
    r.h_err = h.std_error;
    std::vector<Point> lyap_samples;
    if (!rep.is_periodic() && sys.map.constant_log_expansion <= 0.0) {
      lyap_samples.assign(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(samples.size(), 20'000)));
    }
    const auto lam = lyapunov_sum(sys, rep, opt.lyapunov_steps, lyap_samples);
    r.lambda = lam.value;
    r.lambda_err = lam.std_error;
    r.pressure = r.h - r.lambda;
    r.pressure_err = std::hypot(r.h_err, r.lambda_err);
    r.rho = escape.rho;
    r.rho_lower = escape.rho_lower;
    r.gap = std::abs(r.pressure - escape.rho);
    r.ruelle_ok = r.h <= r.lambda + 3.0 * r.pressure_err + 1e-12;

    std::vector<Point> class_samples(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(samples.size(), 50'000)));
    r.classes = class_membership(sys, rep, class_samples, r.lambda, opt.classes);

    r.tolerance = mc ? 3.0 * std::hypot(r.pressure_err, sigma_lower)
                     : std::max(opt.exact_tolerance, 3.0 * std::hypot(r.pressure_err, sigma_lower));
    if (r.classes.all()) {
      r.inequality_ok = escape.rho_lower >= r.pressure - r.tolerance;
      verdict.max_pressure = std::max(verdict.max_pressure, r.pressure);
      if (!r.inequality_ok) {
        verdict.inequality_ok = false;
        diag << "violated: " << r.label << " P=" << r.pressure << " > rho_lower=" << escape.rho_lower
             << " + tol " << r.tolerance << "\n";
      }
    }
    if (!r.ruelle_ok) {
      verdict.ruelle_ok = false;
      diag << "ruelle: " << r.label << " h=" << r.h << " > lambda=" << r.lambda << "\n";
    }
    if (opt.expect_equality && r.label == opt.equality_label) {
      const bool eq = r.gap < opt.exact_tolerance;
      if (!eq) {
        verdict.equality_ok = false;
        diag << "equality: |P - rho| = " << r.gap << " for " << r.label << "\n";
      }
    }
    verdict.reports.push_back(std::move(r));
  }
  verdict.diagnostics = diag.str();
  return verdict;
}

nlohmann::json to_json(const PressureReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(v > 0 ? "inf" : "-inf"); };
  nlohmann::json j;
  j["label"] = r.label;
  j["kind"] = to_string(r.kind);
  j["entropy_route"] = r.entropy_route;
  j["h"] = r.h;
  j["h_err"] = r.h_err;
  j["lambda"] = r.lambda;
  j["lambda_err"] = r.lambda_err;
  j["pressure"] = r.pressure;
  j["pressure_err"] = r.pressure_err;
  j["rho"] = r.rho;
  j["rho_lower"] = r.rho_lower;
  j["gap"] = r.gap;
  j["ruelle_ok"] = r.ruelle_ok;
  j["inequality_ok"] = r.inequality_ok;
  j["tolerance"] = r.tolerance;
  j["classes"] = {{"in_GH", r.classes.in_GH},
                  {"in_GS", r.classes.in_GS},
                  {"in_Gphi", r.classes.in_Gphi},
                  {"inconclusive", r.classes.inconclusive},
                  {"hole_alpha", num(r.classes.hole.alpha)},
                  {"hole_C", r.classes.hole.C},
                  {"singular_alpha", num(r.classes.singular.alpha)},
                  {"gamma", r.classes.gamma},
                  {"c_nu", num(r.classes.c_nu)},
                  {"e_fraction", r.classes.e_fraction}};
  return j;
}

PressureReport pressure_report_from_json(const nlohmann::json& j) {
  auto num = [](const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>() == "inf" ? kInf : -kInf;
    return v.get<double>();
  };
  PressureReport r;
  r.label = j.at("label").get<std::string>();
  r.kind = measure_kind_from_string(j.at("kind").get<std::string>());
  r.entropy_route = j.at("entropy_route").get<std::string>();
  r.h = j.at("h").get<double>();
  r.h_err = j.at("h_err").get<double>();
  r.lambda = j.at("lambda").get<double>();
  r.lambda_err = j.at("lambda_err").get<double>();
  r.pressure = j.at("pressure").get<double>();
  r.pressure_err = j.at("pressure_err").get<double>();
  r.rho = j.at("rho").get<double>();
  r.rho_lower = j.at("rho_lower").get<double>();
  r.gap = j.at("gap").get<double>();
  r.ruelle_ok = j.at("ruelle_ok").get<bool>();
  r.inequality_ok = j.at("inequality_ok").get<bool>();
  r.tolerance = j.at("tolerance").get<double>();
  const auto& c = j.at("classes");
  r.classes.in_GH = c.at("in_GH").get<bool>();
  r.classes.in_GS = c.at("in_GS").get<bool>();
  r.classes.in_Gphi = c.at("in_Gphi").get<bool>();
  r.classes.inconclusive = c.at("inconclusive").get<bool>();
  r.classes.hole.alpha = num(c.at("hole_alpha"));
  r.classes.hole.C = c.at("hole_C").get<double>();
  r.classes.singular.alpha = num(c.at("singular_alpha"));
  r.classes.gamma = c.at("gamma").get<double>();
  r.classes.c_nu = num(c.at("c_nu"));
  r.classes.e_fraction = c.at("e_fraction").get<std::vector<std::pair<double, double>>>();
  return r;
}

void write_pressure_csv(std::ostream& os, const std::vector<PressureReport>& reports) {
  os << "label,kind,h,lambda,pressure,rho,gap,in_GH,in_GS,in_Gphi,inequality_ok\n";
  char buf[512];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d,%d\n", r.label.c_str(),
                  to_string(r.kind).c_str(), r.h, r.lambda, r.pressure, r.rho, r.gap, r.classes.in_GH ? 1 : 0,
                  r.classes.in_GS ? 1 : 0, r.classes.in_Gphi ? 1 : 0, r.inequality_ok ? 1 : 0);
    os << buf;
  }
}

}  // namespace openrate
