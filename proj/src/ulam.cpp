#include "openrate/ulam.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

namespace openrate {

namespace {

using Row = std::vector<std::pair<std::size_t, double>>;

// Pieces of [a, b) not covered by the open hole intervals.
std::vector<std::pair<double, double>> surviving_pieces(double a, double b, const std::vector<OpenInterval>& hole) {
  std::vector<std::pair<double, double>> pieces{{a, b}};
  for (const auto& iv : hole) {
    std::vector<std::pair<double, double>> next;
    for (auto [s, t] : pieces) {
      if (iv.hi <= s || iv.lo >= t) {
        next.emplace_back(s, t);
        continue;
      }
      if (iv.lo > s) next.emplace_back(s, iv.lo);
      if (iv.hi < t) next.emplace_back(iv.hi, t);
    }
    pieces = std::move(next);
  }
  return pieces;
}

void merge_row(Row& row) {
  std::sort(row.begin(), row.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  Row merged;
  for (const auto& e : row) {
    if (!merged.empty() && merged.back().first == e.first) {
      merged.back().second += e.second;
    } else {
      merged.push_back(e);
    }
  }
  row = std::move(merged);
}

bool on_grid(double v, int n) {
  const double s = v * n;
  return std::abs(s - std::round(s)) < 1e-9;
}

}  // namespace

SparseMatrix UlamOperator::killed() const {
  SparseMatrix k = matrix;
  for (int r = 0; r < k.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(k, r); it; ++it) {
      if (is_hole_cell[static_cast<std::size_t>(it.col())]) it.valueRef() = 0.0;
    }
  }
  k.prune(0.0);
  return k;
}

Eigen::VectorXd UlamOperator::push(const Eigen::VectorXd& mass) const {
  return matrix.transpose() * mass;
}

UlamOperator build_ulam(const OpenSystem& sys, int resolution, int subsamples) {
  if (resolution < 1) throw DomainError("build_ulam: resolution must be positive");
  if (subsamples < 1) throw DomainError("build_ulam: subsamples must be positive");
  UlamOperator op;
  op.grid = Grid{sys.map.dimension, resolution};
  const std::size_t cells = op.grid.size();
  op.is_hole_cell.assign(cells, 0);
  op.subsamples = subsamples;

  const HoleKind hk = sys.hole.kind();
  const bool interval_hole = hk == HoleKind::none || hk == HoleKind::cylinder_union || hk == HoleKind::interval_union;
  const bool exact = sys.map.dimension == 1 && !sys.map.affine_branches.empty() && interval_hole;
  op.assembly = exact ? UlamAssembly::exact_affine : UlamAssembly::quadrature;

  if (interval_hole && sys.map.dimension == 1) {
    for (const auto& iv : sys.hole.interval_list()) {
      if (!on_grid(iv.lo, resolution) || !on_grid(iv.hi, resolution)) {
        op.warnings.push_back("resolution-mismatch: hole " + sys.hole.describe() +
                              " is not a union of cells at resolution " + std::to_string(resolution));
        break;
      }
    }
  }

  op.matrix.resize(static_cast<Eigen::Index>(cells), static_cast<Eigen::Index>(cells));
  op.matrix.reserve(Eigen::VectorXi::Constant(static_cast<Eigen::Index>(cells), exact ? 8 : 12));
  const double n = resolution;
  Row row;
  for (std::size_t i = 0; i < cells; ++i) {
    row.clear();
    bool all_in_hole = true;
    if (exact) {
      const double a = static_cast<double>(i) / n;
      const double b = static_cast<double>(i + 1) / n;
      for (auto [s, t] : surviving_pieces(a, b, sys.hole.interval_list())) {
        all_in_hole = false;
        for (const auto& br : sys.map.affine_branches) {
          const double lo = std::max(s, br.lo);
          const double hi = std::min(t, br.hi);
          if (!(hi > lo)) continue;
          double y0 = br.slope * lo + br.offset;
          double y1 = br.slope * hi + br.offset;
          if (y0 > y1) std::swap(y0, y1);
          const double shift = std::floor(y0);
          y0 -= shift;
          y1 -= shift;
          const double inv = 1.0 / std::abs(br.slope);
          const long jlo = static_cast<long>(std::floor(y0 * n));
          const long jhi = static_cast<long>(std::ceil(y1 * n));
          for (long j = jlo; j < jhi; ++j) {
            const double overlap = std::min(y1, (j + 1) / n) - std::max(y0, j / n);
            // Rounding in the branch image leaves slivers of order 1e-16 / n.
            if (overlap <= 1e-12 / n) continue;
            const long jj = ((j % resolution) + resolution) % resolution;
            row.emplace_back(static_cast<std::size_t>(jj), overlap * inv / (b - a));
          }
        }
      }
    } else {
      const Point c = op.grid.corner(i);
      const double h = 1.0 / (n * subsamples);
      const int sy = sys.map.dimension == 2 ? subsamples : 1;
      const double w = 1.0 / (static_cast<double>(subsamples) * sy);
      for (int ky = 0; ky < sy; ++ky) {
        for (int kx = 0; kx < subsamples; ++kx) {
          Point p{c.x + (kx + 0.5) * h, sys.map.dimension == 2 ? c.y + (ky + 0.5) * h : 0.0};
          if (sys.hole.contains(p)) continue;
          all_in_hole = false;
          if (sys.map.singularity_distance(p) < kSingularGuard) continue;
          row.emplace_back(op.grid.index(sys.map.evaluate(p)), w);
        }
      }
    }
    merge_row(row);
    if (all_in_hole) {
      op.is_hole_cell[i] = 1;
      op.hole_cells.push_back(i);
    }
    for (const auto& [j, v] : row) {
      op.matrix.insert(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  op.matrix.makeCompressed();
  return op;
}

namespace {

Eigen::VectorXd positive_start(const UlamOperator& op) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(op.grid.size()));
  for (std::size_t i = 0; i < op.grid.size(); ++i) {
    if (!op.is_hole_cell[i]) u(static_cast<Eigen::Index>(i)) = 1.0;
  }
  return u;
}

struct PowerResult {
  Eigen::VectorXd vec;
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Power iteration on a nonnegative operator with 1-norm normalization. A
// half-step shift (A + I)/2 is used after the plain iteration stalls, which
// separates the dominant eigenvalue from others of equal modulus.
template <typename Apply>
PowerResult power_iterate(Apply apply, Eigen::VectorXd start, double tol, int max_iters) {
  PowerResult r;
  Eigen::VectorXd u = std::move(start);
  u /= u.lpNorm<1>();
  const int plain = max_iters / 2;
  for (int it = 1; it <= max_iters; ++it) {
    Eigen::VectorXd w = apply(u);
    const double lambda = w.lpNorm<1>();
    if (lambda == 0.0) {
      r.vec = u;
      r.value = 0.0;
      r.iterations = it;
      r.residual = 0.0;
      r.converged = false;
      return r;
    }
    const double res = (w - lambda * u).lpNorm<1>();
    r.iterations = it;
    r.value = lambda;
    r.residual = res;
    if (res < tol) {
      r.vec = u;
      r.converged = true;
      return r;
    }
    if (it > plain) {
      u = 0.5 * (w / lambda + u);
    } else {
      u = w / lambda;
    }
  }
  r.vec = u;
  return r;
}

}  // namespace

SpectralData leading_eigenpair(const UlamOperator& op, double tol, int max_iters) {
  const SparseMatrix k = op.killed();
  if (k.nonZeros() == 0) throw DomainError("leading_eigenpair: operator is zero (everything escapes)");
  const SparseMatrix kt = k.transpose();

  auto right = power_iterate([&](const Eigen::VectorXd& u) { Eigen::VectorXd w = kt * u; return w; },
                             positive_start(op), tol, max_iters);
  if (!right.converged) {
    throw ConvergenceError("leading_eigenpair: no convergence after " + std::to_string(right.iterations) +
                           " iterations (residual " + std::to_string(right.residual) + ")");
  }
  auto left = power_iterate([&](const Eigen::VectorXd& u) { Eigen::VectorXd w = k * u; return w; },
                            positive_start(op), tol, max_iters);
  if (!left.converged) {
    throw ConvergenceError("leading_eigenpair: left eigenvector did not converge");
  }

  SpectralData s;
  s.right = right.vec / right.vec.sum();
  s.eigenvalue = (kt * s.right).sum();
  const double pairing = s.right.dot(left.vec);
  if (!(pairing > 0.0)) throw ConvergenceError("leading_eigenpair: eigenvectors are orthogonal");
  s.left = left.vec / pairing;
  s.residual = (kt * s.right - s.eigenvalue * s.right).lpNorm<1>();
  s.left_residual = (k * s.left - s.eigenvalue * s.left).lpNorm<1>() / s.left.lpNorm<1>();
  s.iterations = std::max(right.iterations, left.iterations);

  // Deflated iteration: remove the dominant component each step and measure
  // the average growth of what remains.
  const Eigen::Index dim = s.right.size();
  Eigen::VectorXd x(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    x(i) = op.is_hole_cell[static_cast<std::size_t>(i)] ? 0.0 : std::cos(1.0 + 2.3 * static_cast<double>(i));
  }
  auto deflate = [&](Eigen::VectorXd& y) { y -= s.right * s.left.dot(y); };
  deflate(x);
  double lambda2 = 0.0;
  const int warmup = 40;
  const int measure = 200;
  double log_growth = 0.0;
  int counted = 0;
  for (int it = 0; it < warmup + measure; ++it) {
    double nx = x.norm();
    if (nx == 0.0 || !std::isfinite(nx)) break;
    x /= nx;
    Eigen::VectorXd y = kt * x;
    deflate(y);
    const double ny = y.norm();
    if (ny < 1e-300) {
      log_growth = -kInf;
      counted = 1;
      break;
    }
    if (it >= warmup) {
      log_growth += std::log(ny);
      ++counted;
    }
    x = std::move(y);
  }
  if (counted > 0) lambda2 = std::exp(log_growth / counted);
  s.gap_estimate = s.eigenvalue > 0.0 ? lambda2 / s.eigenvalue : 0.0;
  return s;
}

ConditionalInvarianceReport conditionally_invariant_check(const UlamOperator& op, const SpectralData& s, int n) {
  ConditionalInvarianceReport rep;
  const SparseMatrix k = op.killed();
  const SparseMatrix kt = k.transpose();
  Eigen::VectorXd pushed = kt * s.right;
  if (pushed.sum() > 0.0) pushed /= pushed.sum();
  rep.push_distance = (pushed - s.right).lpNorm<1>();

  Eigen::VectorXd u = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(op.grid.size()), op.grid.cell_volume());
  for (std::size_t i = 0; i < op.grid.size(); ++i) {
    if (op.is_hole_cell[i]) u(static_cast<Eigen::Index>(i)) = 0.0;
  }
  rep.surviving_distance = (u / u.sum() - s.right).lpNorm<1>();
  for (int step = 1; step <= n; ++step) {
    u = kt * u;
    const double total = u.sum();
    if (!(total > 0.0)) throw DegenerateFitError("conditionally_invariant_check: all mass escaped");
    u /= total;
    rep.surviving_distance = (u - s.right).lpNorm<1>();
    rep.history.push_back(rep.surviving_distance);
  }
  return rep;
}

SurvivorMeasure survivor_measure(const UlamOperator& op, const SpectralData& s, double agreement) {
  SurvivorMeasure out;
  out.measure.grid = op.grid;
  const Eigen::Index dim = s.right.size();
  out.measure.mass.assign(static_cast<std::size_t>(dim), 0.0);
  double total = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double v = std::max(0.0, s.right(i) * s.left(i));
    out.measure.mass[static_cast<std::size_t>(i)] = v;
    total += v;
  }
  for (double& v : out.measure.mass) v /= total;

  const SparseMatrix k = op.killed();
  Eigen::VectorXd survive = Eigen::VectorXd::Ones(dim);
  std::vector<double> prev(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> cur(static_cast<std::size_t>(dim), 0.0);
  int steps = 0;
  for (int nstep = 1; nstep <= 200; ++nstep) {
    survive = (k * survive) / s.eigenvalue;
    for (Eigen::Index i = 0; i < dim; ++i) cur[static_cast<std::size_t>(i)] = s.right(i) * survive(i);
    steps = nstep;
    if (nstep > 1 && l1_distance(cur, prev) < 1e-8) break;
    prev = cur;
  }
  double limit_total = 0.0;
  for (double v : cur) limit_total += v;
  if (limit_total > 0.0) {
    for (double& v : cur) v /= limit_total;
  }
  out.limit_route = cur;
  out.limit_steps = steps;
  out.discrepancy = l1_distance(out.measure.mass, cur);
  if (out.discrepancy > agreement) {
    throw ConvergenceError("survivor_measure: product and limit routes differ by " +
                           std::to_string(out.discrepancy) + " in L1");
  }
  return out;
}

void write_triplets(std::ostream& os, const SparseMatrix& m) {
  os.precision(17);
  os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (int r = 0; r < m.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
}

SparseMatrix read_triplets(std::istream& is) {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index nnz = 0;
  if (!(is >> rows >> cols >> nnz)) throw ConfigError("triplet file: bad header");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(nnz));
  for (Eigen::Index k = 0; k < nnz; ++k) {
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    double v = 0.0;
    if (!(is >> i >> j >> v)) throw ConfigError("triplet file: truncated at entry " + std::to_string(k));
    trips.emplace_back(i, j, v);
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

nlohmann::json spectral_to_json(const SpectralData& s) {
  nlohmann::json j;
  j["eigenvalue"] = s.eigenvalue;
  j["residual"] = s.residual;
  j["left_residual"] = s.left_residual;
  j["gap_estimate"] = s.gap_estimate;
  j["iterations"] = s.iterations;
  j["right"] = std::vector<double>(s.right.data(), s.right.data() + s.right.size());
  j["left"] = std::vector<double>(s.left.data(), s.left.data() + s.left.size());
  return j;
}

SpectralData spectral_from_json(const nlohmann::json& j) {
  SpectralData s;
  s.eigenvalue = j.at("eigenvalue").get<double>();
  s.residual = j.at("residual").get<double>();
  s.left_residual = j.value("left_residual", 0.0);
  s.gap_estimate = j.at("gap_estimate").get<double>();
  s.iterations = j.value("iterations", 0);
  const auto r = j.at("right").get<std::vector<double>>();
  const auto l = j.at("left").get<std::vector<double>>();
  s.right = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  s.left = Eigen::Map<const Eigen::VectorXd>(l.data(), static_cast<Eigen::Index>(l.size()));
  return s;
}

}  // namespace openrate
