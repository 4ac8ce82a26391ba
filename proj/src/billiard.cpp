#include "openrate/billiard.hpp"

#include "openrate/json_util.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace openrate {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
constexpr BReal kPiL = 3.141592653589793238462643383279502884L;
constexpr BReal kTwoPiL = 2.0L * kPiL;
constexpr double kTangentGuard = 1e-9;
constexpr double kClearance = 1e-3;

double circumference(const Scatterer& s) { return kTwoPi * s.radius; }

BReal wrap_arc(BReal r, BReal length) {
  BReal w = std::fmod(r, length);
  if (w < 0.0L) w += length;
  return w;
}

BReal circumference_l(const Scatterer& s) { return kTwoPiL * s.radius; }

std::vector<std::vector<ScattererCopy>> reachable_copies(const std::vector<Scatterer>& sc, double tau) {
  std::vector<std::vector<ScattererCopy>> out(sc.size());
  const int span = static_cast<int>(std::ceil(tau + 1.0));
  for (std::size_t i = 0; i < sc.size(); ++i) {
    for (std::size_t j = 0; j < sc.size(); ++j) {
      for (int kx = -span; kx <= span; ++kx) {
        for (int ky = -span; ky <= span; ++ky) {
          if (i == j && kx == 0 && ky == 0) continue;
          const double cx = sc[j].cx + kx;
          const double cy = sc[j].cy + ky;
          if (std::hypot(cx - sc[i].cx, cy - sc[i].cy) <= sc[i].radius + tau + sc[j].radius) {
            out[i].push_back({static_cast<int>(j), cx, cy, sc[j].radius});
          }
        }
      }
    }
  }
  return out;
}

// Trajectory in Cartesian form: position relative to the center of the
// current scatterer (base cell) and the outgoing unit velocity.
template <typename R>
struct Particle {
  int id = 0;
  R px = 0;
  R py = 0;
  R vx = 1;
  R vy = 0;
};

template <typename R>
struct Hop {
  R x0 = 0;
  R y0 = 0;
  R vx = 0;
  R vy = 0;
  R length = 0;
  bool tangential = false;
};

// Next collision against an explicit copy list, with specular reflection.
// Returns false when no copy is hit.
template <typename R>
bool particle_step(const BilliardTable& table, const std::vector<std::vector<ScattererCopy>>& copies, Particle<R>& p,
                   Hop<R>& hop) {
  const auto& sc = table.scatterers[static_cast<std::size_t>(p.id)];
  const R x = sc.cx + p.px;
  const R y = sc.cy + p.py;
  R best = std::numeric_limits<R>::infinity();
  const ScattererCopy* hit = nullptr;
  for (const auto& c : copies[static_cast<std::size_t>(p.id)]) {
    const R dx = x - c.cx;
    const R dy = y - c.cy;
    const R b = p.vx * dx + p.vy * dy;
    if (b >= 0) continue;
    const R rr = c.radius;
    const R cc = dx * dx + dy * dy - rr * rr;
    const R disc = b * b - cc;
    if (disc < 0) continue;
    // Near entry root in the cancellation-free form.
    const R t = cc / (-b + std::sqrt(disc));
    if (t > 0 && t < best) {
      best = t;
      hit = &c;
    }
  }
  if (hit == nullptr) return false;
  const R radius = hit->radius;
  const R qx = x + best * p.vx - hit->cx;
  const R qy = y + best * p.vy - hit->cy;
  const R qn = std::sqrt(qx * qx + qy * qy);
  const R nx = qx / qn;
  const R ny = qy / qn;
  const R dot = p.vx * nx + p.vy * ny;
  hop = {x, y, p.vx, p.vy, best, false};
  p.id = hit->id;
  p.px = radius * nx;
  p.py = radius * ny;
  const R ox = p.vx - 2 * dot * nx;
  const R oy = p.vy - 2 * dot * ny;
  const R on = std::sqrt(ox * ox + oy * oy);
  p.vx = ox / on;
  p.vy = oy / on;
  // cos(theta) = n . v; |theta| > pi/2 - g  <=>  cos(theta) < sin(g).
  hop.tangential = p.vx * nx + p.vy * ny < static_cast<R>(kTangentGuard);
  return true;
}

template <typename R>
Particle<R> particle_from_state(const BilliardTable& table, const CollisionState& s) {
  const auto& sc = table.scatterers.at(static_cast<std::size_t>(s.id));
  const BReal phi = s.r / static_cast<BReal>(sc.radius);
  Particle<R> p;
  p.id = s.id;
  p.px = static_cast<R>(sc.radius * std::cos(phi));
  p.py = static_cast<R>(sc.radius * std::sin(phi));
  p.vx = static_cast<R>(std::cos(phi + s.theta));
  p.vy = static_cast<R>(std::sin(phi + s.theta));
  return p;
}

bool advance(const BilliardTable& table, const std::vector<std::vector<ScattererCopy>>& copies, const CollisionState& s,
             CollisionStep& step) {
  Particle<BReal> p = particle_from_state<BReal>(table, s);
  Hop<BReal> hop;
  if (!particle_step(table, copies, p, hop)) return false;
  const BReal radius = table.scatterers[static_cast<std::size_t>(p.id)].radius;
  const BReal nx = p.px / radius;
  const BReal ny = p.py / radius;
  BReal phi = std::atan2(ny, nx);
  if (phi < 0.0L) phi += kTwoPiL;
  step.next.id = p.id;
  step.next.r = wrap_arc(radius * phi, kTwoPiL * radius);
  step.next.theta = std::atan2(nx * p.vy - ny * p.vx, nx * p.vx + ny * p.vy);
  step.flight = {hop.x0, hop.y0, hop.vx, hop.vy, hop.length};
  step.tangential = hop.tangential;
  return true;
}

template <typename R>
bool crosses_disk(const BilliardHole& hole, R x0, R y0, R vx, R vy, R length) {
  const R reach = length + hole.radius;
  const R bx = std::floor(x0);
  const R by = std::floor(y0);
  const R r2 = static_cast<R>(hole.radius) * hole.radius;
  for (int kx = -2; kx <= 2; ++kx) {
    for (int ky = -2; ky <= 2; ++ky) {
      const R dx = hole.cx + bx + kx - x0;
      const R dy = hole.cy + by + ky - y0;
      if (dx * dx + dy * dy > reach * reach) continue;
      const R s = std::clamp(dx * vx + dy * vy, R(0), length);
      const R px = dx - s * vx;
      const R py = dy - s * vy;
      if (px * px + py * py < r2) return true;
    }
  }
  return false;
}

}  // namespace

double BilliardTable::boundary_length() const {
  double total = 0.0;
  for (const auto& s : scatterers) total += circumference(s);
  return total;
}

BilliardTable make_table(std::vector<Scatterer> scatterers, const TableOptions& opt) {
  if (scatterers.empty()) throw ConfigError("table: no scatterers");
  for (std::size_t i = 0; i < scatterers.size(); ++i) {
    if (!(scatterers[i].radius > 0.0)) throw ConfigError("table: scatterer " + std::to_string(i) + " has radius <= 0");
    for (std::size_t j = i; j < scatterers.size(); ++j) {
      for (int kx = -1; kx <= 1; ++kx) {
        for (int ky = -1; ky <= 1; ++ky) {
          if (i == j && kx == 0 && ky == 0) continue;
          const double d = std::hypot(scatterers[j].cx + kx - scatterers[i].cx, scatterers[j].cy + ky - scatterers[i].cy);
          const double gap = d - scatterers[i].radius - scatterers[j].radius;
          if (gap < kClearance) {
            std::ostringstream msg;
            msg << "table: scatterers " << i << " and " << j << " have clearance " << gap << " < " << kClearance;
            throw ConfigError(msg.str());
          }
        }
      }
    }
  }
  BilliardTable t;
  t.scatterers = std::move(scatterers);
  t.tau_max = opt.tau_max;
  // Validate the horizon with a search radius well past tau_max.
  const double wide = std::max(3.0, 2.0 * opt.tau_max);
  const auto wide_copies = reachable_copies(t.scatterers, wide);
  const std::size_t shards = shard_count(static_cast<std::size_t>(opt.validation_rays));
  double longest = 0.0;
  for (std::size_t s = 0; s < shards; ++s) {
    ShardRng rng(opt.seed, s);
    const auto end = std::min<std::size_t>((s + 1) * kShardSize, static_cast<std::size_t>(opt.validation_rays));
    for (std::size_t k = s * kShardSize; k < end; ++k) {
      const CollisionState st = sample_srb(t, rng);
      CollisionStep step;
      if (!advance(t, wide_copies, st, step)) {
        throw ConfigError("table: a validation ray flies farther than " + std::to_string(wide) + " (infinite horizon?)");
      }
      longest = std::max(longest, static_cast<double>(step.flight.length));
    }
  }
  t.measured_max_flight = longest;
  t.validation_rays = opt.validation_rays;
  if (longest > t.tau_max) {
    throw ConfigError("table: free flight " + std::to_string(longest) + " exceeds tau_max " + std::to_string(t.tau_max));
  }
  t.reachable = reachable_copies(t.scatterers, t.tau_max);
  return t;
}

BilliardTable default_table(const TableOptions& opt) {
  return make_table({{0.0, 0.0, 0.41}, {0.5, 0.5, 0.25}}, opt);
}

void state_geometry(const BilliardTable& table, const CollisionState& s, BReal& x, BReal& y, BReal& vx, BReal& vy) {
  const auto& sc = table.scatterers.at(static_cast<std::size_t>(s.id));
  const BReal phi = s.r / static_cast<BReal>(sc.radius);
  x = sc.cx + sc.radius * std::cos(phi);
  y = sc.cy + sc.radius * std::sin(phi);
  vx = std::cos(phi + s.theta);
  vy = std::sin(phi + s.theta);
}

CollisionStep collision_map(const BilliardTable& table, const CollisionState& s) {
  if (std::abs(s.theta) >= kPiL / 2.0L) throw DomainError("collision_map: |theta| >= pi/2");
  CollisionStep step;
  if (!advance(table, table.reachable, s, step)) {
    throw DomainError("collision_map: no collision within tau_max from scatterer " + std::to_string(s.id));
  }
  return step;
}

CollisionState time_reverse(const CollisionState& s) { return {s.id, s.r, -s.theta}; }

double state_distance(const BilliardTable& table, const CollisionState& a, const CollisionState& b) {
  if (a.id != b.id) return kInf;
  const BReal len = circumference_l(table.scatterers.at(static_cast<std::size_t>(a.id)));
  const BReal dr = wrap_arc(a.r - b.r, len);
  return static_cast<double>(std::min(dr, len - dr) + std::abs(a.theta - b.theta));
}

CollisionState sample_srb(const BilliardTable& table, ShardRng& rng) {
  BReal u = rng.uniform() * static_cast<BReal>(table.boundary_length());
  CollisionState s;
  for (std::size_t i = 0; i < table.scatterers.size(); ++i) {
    const BReal len = circumference_l(table.scatterers[i]);
    if (u < len || i + 1 == table.scatterers.size()) {
      s.id = static_cast<int>(i);
      s.r = std::min(u, std::nextafter(len, 0.0L));
      break;
    }
    u -= len;
  }
  s.theta = std::asin(2.0L * rng.uniform() - 1.0L);
  if (std::abs(s.theta) >= kPiL / 2.0L) s.theta = 0.0L;
  return s;
}

BilliardHole BilliardHole::arc(int id, double a, double b) {
  BilliardHole h;
  h.kind = Kind::type_I;
  h.id = id;
  h.a = a;
  h.b = b;
  return h;
}

BilliardHole BilliardHole::disk(double cx, double cy, double radius) {
  BilliardHole h;
  h.kind = Kind::type_II;
  h.cx = cx;
  h.cy = cy;
  h.radius = radius;
  return h;
}

std::string BilliardHole::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::none:
      os << "none";
      break;
    case Kind::type_I:
      os << "type_I(scatterer " << id << ", arc (" << a << ", " << b << "))";
      break;
    case Kind::type_II:
      os << "type_II(disk (" << cx << ", " << cy << "), r=" << radius << ")";
      break;
  }
  return os.str();
}

BilliardHole arc_fraction(const BilliardTable& table, int id, double fraction, double angle) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("arc fraction must lie in (0, 1)");
  const auto& sc = table.scatterers.at(static_cast<std::size_t>(id));
  const double center = sc.radius * angle;
  const double half = 0.5 * fraction * circumference(sc);
  return BilliardHole::arc(id, center - half, center + half);
}

void validate_hole(const BilliardTable& table, const BilliardHole& hole) {
  if (hole.kind == BilliardHole::Kind::type_I) {
    if (hole.id < 0 || static_cast<std::size_t>(hole.id) >= table.scatterers.size()) {
      throw ConfigError("hole: scatterer " + std::to_string(hole.id) + " does not exist");
    }
    const double len = circumference(table.scatterers[static_cast<std::size_t>(hole.id)]);
    if (!(hole.b > hole.a) || hole.b - hole.a >= len) throw ConfigError("hole: arc must satisfy a < b < a + circumference");
  } else if (hole.kind == BilliardHole::Kind::type_II) {
    if (!(hole.radius > 0.0)) throw ConfigError("hole: disk radius must be positive");
    for (std::size_t i = 0; i < table.scatterers.size(); ++i) {
      const auto& sc = table.scatterers[i];
      for (int kx = -2; kx <= 2; ++kx) {
        for (int ky = -2; ky <= 2; ++ky) {
          const double gap = std::hypot(sc.cx + kx - hole.cx, sc.cy + ky - hole.cy) - sc.radius - hole.radius;
          if (gap < kClearance) {
            throw ConfigError("hole: disk closure meets scatterer " + std::to_string(i) + " (clearance " +
                              std::to_string(gap) + ")");
          }
        }
      }
    }
  }
}

bool hole_contains_state(const BilliardTable& table, const BilliardHole& hole, const CollisionState& s) {
  if (hole.kind != BilliardHole::Kind::type_I || s.id != hole.id) return false;
  const BReal len = circumference_l(table.scatterers[static_cast<std::size_t>(s.id)]);
  const BReal rel = wrap_arc(s.r - hole.a, len);
  return rel > 0.0L && rel < static_cast<BReal>(hole.b) - hole.a;
}

bool flight_crosses(const BilliardHole& hole, const Flight& f) {
  if (hole.kind != BilliardHole::Kind::type_II) return false;
  return crosses_disk<BReal>(hole, f.x0, f.y0, f.vx, f.vy, f.length);
}

std::vector<EscapeEstimate> billiard_escape(const BilliardTable& table, const std::vector<BilliardHole>& holes,
                                            const BilliardRunOptions& opt) {
  for (const auto& h : holes) validate_hole(table, h);
  if (opt.samples < 10'000) throw DomainError("billiard_escape: at least 10^4 samples are required");
  const std::size_t nh = holes.size();
  const std::size_t len = static_cast<std::size_t>(opt.n_max) + 2;
  const std::size_t shards = shard_count(static_cast<std::size_t>(opt.samples));
  std::vector<std::vector<long long>> hist(shards, std::vector<long long>(nh * len, 0));
  std::vector<long long> singular(shards, 0);
  // Type I arcs as (scatterer, unit vector to the arc center, cos of the
  // half-angle): a collision at normal n lies in the arc iff n . u > cos w.
  struct ArcTest {
    int id = -1;
    double ux = 0.0;
    double uy = 0.0;
    double cos_half = 1.0;
  };
  std::vector<ArcTest> arcs(nh);
  for (std::size_t j = 0; j < nh; ++j) {
    if (holes[j].kind != BilliardHole::Kind::type_I) continue;
    const double radius = table.scatterers[static_cast<std::size_t>(holes[j].id)].radius;
    const double mid = 0.5 * (holes[j].a + holes[j].b) / radius;
    arcs[j] = {holes[j].id, std::cos(mid), std::sin(mid), std::cos(0.5 * (holes[j].b - holes[j].a) / radius)};
  }
  for_each_shard(shards, opt.workers, [&](std::size_t sh) {
    ShardRng rng(opt.seed, sh);
    auto& h = hist[sh];
    std::vector<int> escape(nh);
    const auto end = std::min<std::size_t>((sh + 1) * kShardSize, static_cast<std::size_t>(opt.samples));
    for (std::size_t k = sh * kShardSize; k < end; ++k) {
      const CollisionState s0 = sample_srb(table, rng);
      Particle<double> p = particle_from_state<double>(table, s0);
      std::size_t active = 0;
      for (std::size_t j = 0; j < nh; ++j) {
        escape[j] = -1;
        if (holes[j].kind == BilliardHole::Kind::none) continue;
        if (hole_contains_state(table, holes[j], s0)) {
          escape[j] = 0;
        } else {
          ++active;
        }
      }
      bool tangent = false;
      Hop<double> hop;
      for (int i = 0; i < opt.n_max && active > 0; ++i) {
        if (!particle_step(table, table.reachable, p, hop)) {
          throw DomainError("billiard_escape: no collision within tau_max");
        }
        if (hop.tangential) {
          tangent = true;
          break;
        }
        const double radius = table.scatterers[static_cast<std::size_t>(p.id)].radius;
        for (std::size_t j = 0; j < nh; ++j) {
          if (escape[j] >= 0) continue;
          bool in = false;
          if (holes[j].kind == BilliardHole::Kind::type_II) {
            in = crosses_disk<double>(holes[j], hop.x0, hop.y0, hop.vx, hop.vy, hop.length);
          } else if (holes[j].kind == BilliardHole::Kind::type_I && arcs[j].id == p.id) {
            in = (p.px * arcs[j].ux + p.py * arcs[j].uy) / radius > arcs[j].cos_half;
          }
          if (in) {
            escape[j] = i + 1;
            --active;
          }
        }
      }
      if (tangent) {
        ++singular[sh];
        continue;
      }
      for (std::size_t j = 0; j < nh; ++j) {
        ++h[j * len + (escape[j] < 0 ? len - 1 : static_cast<std::size_t>(escape[j]))];
      }
    }
  });
  long long sing = 0;
  for (long long v : singular) sing += v;
  std::vector<EscapeEstimate> out;
  for (std::size_t j = 0; j < nh; ++j) {
    std::vector<long long> total(len, 0);
    for (std::size_t sh = 0; sh < shards; ++sh) {
      for (std::size_t i = 0; i < len; ++i) total[i] += hist[sh][j * len + i];
    }
    out.push_back(escape_from_histogram(total, opt.samples, sing, opt.n_max, opt.window));
  }
  return out;
}

EscapeEstimate billiard_escape(const BilliardTable& table, const BilliardHole& hole, const BilliardRunOptions& opt) {
  return billiard_escape(table, std::vector<BilliardHole>{hole}, opt).front();
}

ChiSquare srb_chi_square(const BilliardTable& table, const std::vector<CollisionState>& states, int bins) {
  if (bins < 2) throw DomainError("srb_chi_square: need at least 2 bins per axis");
  std::vector<double> offset;
  double acc = 0.0;
  for (const auto& s : table.scatterers) {
    offset.push_back(acc);
    acc += circumference(s);
  }
  const double total_len = acc;
  std::vector<long long> counts(static_cast<std::size_t>(bins) * static_cast<std::size_t>(bins), 0);
  for (const auto& s : states) {
    const double pos = (offset[static_cast<std::size_t>(s.id)] + static_cast<double>(s.r)) / total_len;
    const double sn = 0.5 * (std::sin(static_cast<double>(s.theta)) + 1.0);
    const auto a = std::min(bins - 1, static_cast<int>(pos * bins));
    const auto b = std::min(bins - 1, static_cast<int>(sn * bins));
    ++counts[static_cast<std::size_t>(a) * static_cast<std::size_t>(bins) + static_cast<std::size_t>(b)];
  }
  ChiSquare c;
  c.samples = static_cast<long long>(states.size());
  const double expected = static_cast<double>(states.size()) / static_cast<double>(counts.size());
  for (long long k : counts) c.statistic += (static_cast<double>(k) - expected) * (static_cast<double>(k) - expected) / expected;
  c.dof = static_cast<int>(counts.size()) - 1;
  boost::math::chi_squared dist(c.dof);
  c.p_value = boost::math::cdf(boost::math::complement(dist, c.statistic));
  return c;
}

ChiSquare srb_stationarity(const BilliardTable& table, long long samples, int steps, std::uint64_t seed, int workers) {
  const std::size_t shards = shard_count(static_cast<std::size_t>(samples));
  std::vector<std::vector<CollisionState>> parts(shards);
  for_each_shard(shards, workers, [&](std::size_t sh) {
    ShardRng rng(seed, sh);
    const auto end = std::min<std::size_t>((sh + 1) * kShardSize, static_cast<std::size_t>(samples));
    for (std::size_t k = sh * kShardSize; k < end; ++k) {
      CollisionState s = sample_srb(table, rng);
      bool ok = true;
      for (int i = 0; i < steps && ok; ++i) {
        const auto step = collision_map(table, s);
        ok = !step.tangential;
        s = step.next;
      }
      if (ok) parts[sh].push_back(s);
    }
  });
  std::vector<CollisionState> all;
  for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  return srb_chi_square(table, all);
}

ReversibilityReport reversibility(const BilliardTable& table, long long orbits, int steps, std::uint64_t seed) {
  ReversibilityReport rep;
  ShardRng rng(seed, 0);
  for (long long k = 0; k < orbits; ++k) {
    const CollisionState start = sample_srb(table, rng);
    CollisionState s = start;
    bool ok = true;
    for (int i = 0; i < steps && ok; ++i) {
      const auto step = collision_map(table, s);
      ok = !step.tangential;
      s = step.next;
    }
    s = time_reverse(s);
    for (int i = 0; i < steps && ok; ++i) {
      const auto step = collision_map(table, s);
      ok = !step.tangential;
      s = step.next;
    }
    if (!ok) {
      ++rep.skipped;
      continue;
    }
    ++rep.orbits;
    rep.max_error = std::max(rep.max_error, state_distance(table, time_reverse(s), start));
  }
  return rep;
}

FitDiagnostics fit_diagnostics(const EscapeEstimate& e) {
  FitDiagnostics d;
  std::vector<double> ns;
  std::vector<double> ys;
  for (const auto& [n, m] : e.per_n_mass) {
    if (n < e.window.n_min || n > e.window.n_max || !(m > 0.0)) continue;
    ns.push_back(n);
    ys.push_back(std::log(m));
  }
  if (ns.size() < 3) return d;
  const double slope = ols_slope(ns, ys);
  const double mx = std::accumulate(ns.begin(), ns.end(), 0.0) / static_cast<double>(ns.size());
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double r = ys[i] - (my + slope * (ns[i] - mx));
    ss += r * r;
    d.max_residual = std::max(d.max_residual, std::abs(r));
  }
  d.rms_residual = std::sqrt(ss / static_cast<double>(ns.size()));
  double lo = kInf;
  double hi = -kInf;
  for (std::size_t i = 1; i < ys.size(); ++i) {
    lo = std::min(lo, ys[i] - ys[i - 1]);
    hi = std::max(hi, ys[i] - ys[i - 1]);
    if (i + 1 < ys.size()) d.convexity_defect = std::max(d.convexity_defect, -(ys[i + 1] - 2.0 * ys[i] + ys[i - 1]));
  }
  d.ratio_spread = hi - lo;
  return d;
}

nlohmann::json to_json(const BilliardTable& t) {
  nlohmann::json sc = nlohmann::json::array();
  for (const auto& s : t.scatterers) sc.push_back({{"center", {s.cx, s.cy}}, {"radius", s.radius}});
  return {{"scatterers", sc}, {"tau_max", t.tau_max}, {"validation_rays", t.validation_rays},
          {"measured_max_flight", t.measured_max_flight}};
}

BilliardTable table_from_json(const nlohmann::json& j, const TableOptions& base) {
  require_known_keys(j, {"scatterers", "tau_max", "validation_rays", "measured_max_flight", "seed"}, "table");
  TableOptions opt = base;
  opt.tau_max = optional_field<double>(j, "tau_max", opt.tau_max, "table");
  opt.validation_rays = optional_field<long long>(j, "validation_rays", opt.validation_rays, "table");
  opt.seed = optional_field<std::uint64_t>(j, "seed", opt.seed, "table");
  std::vector<Scatterer> sc;
  if (!j.contains("scatterers")) return default_table(opt);
  const auto& arr = j.at("scatterers");
  if (!arr.is_array()) throw ConfigError("table.scatterers: expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "table.scatterers[" + std::to_string(i) + "]";
    require_known_keys(arr[i], {"center", "radius"}, where);
    const auto c = require_field<std::vector<double>>(arr[i], "center", where);
    if (c.size() != 2) throw ConfigError(where + ".center: expected [x, y]");
    sc.push_back({c[0], c[1], require_field<double>(arr[i], "radius", where)});
  }
  return make_table(std::move(sc), opt);
}

nlohmann::json to_json(const BilliardHole& h) {
  switch (h.kind) {
    case BilliardHole::Kind::none:
      return {{"kind", "none"}};
    case BilliardHole::Kind::type_I:
      return {{"kind", "type_I"}, {"scatterer", h.id}, {"arc", {h.a, h.b}}};
    case BilliardHole::Kind::type_II:
      return {{"kind", "type_II"}, {"center", {h.cx, h.cy}}, {"radius", h.radius}};
  }
  return {};
}

BilliardHole billiard_hole_from_json(const nlohmann::json& j, const BilliardTable& table) {
  require_known_keys(j, {"kind", "scatterer", "arc", "fraction", "angle", "center", "radius"}, "billiard hole");
  const auto kind = require_field<std::string>(j, "kind", "billiard hole");
  BilliardHole h;
  if (kind == "none") {
    h = BilliardHole::none();
  } else if (kind == "type_I") {
    const int id = require_field<int>(j, "scatterer", "billiard hole");
    if (j.contains("arc")) {
      const auto arc = require_field<std::vector<double>>(j, "arc", "billiard hole");
      if (arc.size() != 2) throw ConfigError("billiard hole.arc: expected [a, b]");
      h = BilliardHole::arc(id, arc[0], arc[1]);
    } else {
      if (id < 0 || static_cast<std::size_t>(id) >= table.scatterers.size()) {
        throw ConfigError("billiard hole.scatterer: " + std::to_string(id) + " does not exist");
      }
      h = arc_fraction(table, id, require_field<double>(j, "fraction", "billiard hole"),
                       optional_field<double>(j, "angle", 0.0, "billiard hole"));
    }
  } else if (kind == "type_II") {
    const auto c = require_field<std::vector<double>>(j, "center", "billiard hole");
    if (c.size() != 2) throw ConfigError("billiard hole.center: expected [x, y]");
    h = BilliardHole::disk(c[0], c[1], require_field<double>(j, "radius", "billiard hole"));
  } else {
    throw ConfigError("billiard hole.kind: unknown kind '" + kind + "'");
  }
  validate_hole(table, h);
  return h;
}

}  // namespace openrate
