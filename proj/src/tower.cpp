#include "openrate/tower.hpp"

#include "openrate/json_util.hpp"
#include "openrate/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

namespace openrate {

std::vector<int> TowerSpec::unholed() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (!branches[i].holed) out.push_back(static_cast<int>(i));
  }
  return out;
}

int TowerSpec::max_return() const {
  int r = 0;
  for (const auto& b : branches) r = std::max(r, b.R);
  return r;
}

Eigen::MatrixXd weight_matrix(const TowerSpec& t, double r) {
  const auto live = t.unholed();
  const auto k = static_cast<Eigen::Index>(live.size());
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto& b = t.branches[static_cast<std::size_t>(live[static_cast<std::size_t>(a)])];
    const double w = std::pow(r, -b.R) / b.J;
    for (Eigen::Index c = 0; c < k; ++c) {
      const int i = live[static_cast<std::size_t>(a)];
      const int j = live[static_cast<std::size_t>(c)];
      double v = w;
      if (t.transition.size() != 0) v *= t.transition(i, j);
      if (t.distortion.size() != 0) v *= std::exp(-t.distortion(i, j));
      m(a, c) = v;
    }
  }
  return m;
}

namespace {

double spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  double best = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) best = std::max(best, std::abs(es.eigenvalues()(i)));
  return best;
}

// Perron vector of a nonnegative matrix, scaled to sum 1.
Eigen::VectorXd perron_vector(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, true);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()(i).real() > es.eigenvalues()(best).real()) best = i;
  }
  Eigen::VectorXd v = es.eigenvectors().col(best).real().cwiseAbs();
  return v / v.sum();
}

double log_sum_exp(const std::vector<double>& xs) {
  double mx = -kInf;
  for (double x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

std::vector<double> log_weights(const TowerSpec& t, double r) {
  std::vector<double> out;
  for (int i : t.unholed()) {
    const auto& b = t.branches[static_cast<std::size_t>(i)];
    out.push_back(-b.R * std::log(r) - std::log(b.J));
  }
  return out;
}

}  // namespace

double tower_eigenvalue(const TowerSpec& t, double tol) {
  if (t.unholed().empty()) throw DomainError("tower_eigenvalue: every branch is holed, the survivor set is empty");
  std::function<double(double)> g;
  if (t.full_shift()) {
    g = [&t](double r) { return log_sum_exp(log_weights(t, r)); };
  } else {
    g = [&t](double r) {
      const double rad = spectral_radius(weight_matrix(t, r));
      return rad > 0.0 ? std::log(rad) : -kInf;
    };
  }
  double lo = 1.0;
  double hi = 1.0;
  for (int i = 0; g(lo) <= 0.0; ++i) {
    if (i > 200) throw DomainError("tower_eigenvalue: no root (weights vanish)");
    lo *= 0.5;
  }
  for (int i = 0; g(hi) > 0.0; ++i) {
    if (i > 200) throw DomainError("tower_eigenvalue: no root (weights do not decay)");
    hi *= 2.0;
  }
  if (lo == hi) lo = hi * 0.5;
  std::uintmax_t iters = 300;
  const auto bracket = boost::math::tools::toms748_solve(
      g, lo, hi, [tol](double a, double b) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(a)); }, iters);
  return 0.5 * (bracket.first + bracket.second);
}

double TowerMeasure::weight(const std::vector<int>& word) const {
  if (word.empty()) return 1.0;
  auto it = cylinder_weights.find(word);
  if (it != cylinder_weights.end()) return it->second;
  double w = stationary(word[0]);
  for (std::size_t k = 1; k < word.size(); ++k) w *= chain(word[k - 1], word[k]);
  return w;
}

TowerMeasure gibbs_measure(const TowerSpec& t, double r, int depth) {
  TowerMeasure nu;
  nu.states = t.unholed();
  const auto k = static_cast<Eigen::Index>(nu.states.size());
  if (k == 0) throw DomainError("gibbs_measure: no unholed branch");
  const Eigen::MatrixXd m = weight_matrix(t, r);
  if (t.full_shift()) {
    const auto lw = log_weights(t, r);
    Eigen::VectorXd p(k);
    for (Eigen::Index i = 0; i < k; ++i) p(i) = std::exp(lw[static_cast<std::size_t>(i)]);
    p /= p.sum();
    nu.stationary = p;
    nu.chain = p.transpose().replicate(k, 1);
  } else {
    const Eigen::VectorXd v = perron_vector(m);
    const Eigen::VectorXd u = perron_vector(m.transpose());
    const double rad = spectral_radius(m);
    nu.chain.resize(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) nu.chain(i, j) = m(i, j) * v(j) / (rad * v(i));
      nu.chain.row(i) /= nu.chain.row(i).sum();
    }
    nu.stationary = u.cwiseProduct(v);
    nu.stationary /= nu.stationary.sum();
  }

  double words = 1.0;
  for (int d = 0; d < depth; ++d) words *= static_cast<double>(k);
  if (words > 2e6) throw DomainError("gibbs_measure: depth " + std::to_string(depth) + " enumerates too many words");
  std::vector<int> word;
  std::function<void(double)> grow = [&](double w) {
    if (!word.empty()) nu.cylinder_weights[word] = w;
    if (static_cast<int>(word.size()) == depth) return;
    for (Eigen::Index s = 0; s < k; ++s) {
      const double next = word.empty() ? nu.stationary(s) : w * nu.chain(word.back(), s);
      word.push_back(static_cast<int>(s));
      grow(next);
      word.pop_back();
    }
  };
  grow(1.0);

  nu.return_integral = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    nu.return_integral += nu.stationary(i) * t.branches[static_cast<std::size_t>(nu.states[static_cast<std::size_t>(i)])].R;
  }
  const int max_r = t.max_return();
  nu.level_masses.assign(static_cast<std::size_t>(max_r), 0.0);
  for (Eigen::Index i = 0; i < k; ++i) {
    const int R = t.branches[static_cast<std::size_t>(nu.states[static_cast<std::size_t>(i)])].R;
    for (int l = 0; l < R; ++l) nu.level_masses[static_cast<std::size_t>(l)] += nu.stationary(i) / nu.return_integral;
  }
  return nu;
}

GibbsBoundReport gibbs_bounds(const TowerSpec& t, double r, const TowerMeasure& nu, int depth) {
  GibbsBoundReport rep;
  const Eigen::MatrixXd m = weight_matrix(t, r);
  const auto k = m.rows();
  double c1 = 0.0;
  if (t.distortion.size() != 0) {
    for (int i : nu.states) {
      double lo = kInf;
      double hi = -kInf;
      for (int j : nu.states) {
        lo = std::min(lo, t.distortion(i, j));
        hi = std::max(hi, t.distortion(i, j));
      }
      c1 = std::max(c1, hi - lo);
    }
  }
  rep.measured_C1 = c1;
  double log_c = 2.0 * c1;
  if (t.transition.size() != 0) {
    // Subshifts add the spread of the Perron vectors.
    const Eigen::VectorXd v = perron_vector(m);
    const Eigen::VectorXd u = perron_vector(m.transpose());
    log_c += std::log(u.maxCoeff() / u.minCoeff()) + std::log(v.maxCoeff() / v.minCoeff()) +
             std::log(m.maxCoeff() / m.minCoeff());
  }
  rep.bound_constant = std::exp(log_c);
  for (const auto& [word, w] : nu.cylinder_weights) {
    if (static_cast<int>(word.size()) > depth) continue;
    double s = 0.0;
    bool allowed = true;
    for (std::size_t q = 0; q + 1 < word.size(); ++q) {
      const double e = m(word[q], word[q + 1]);
      if (e <= 0.0) allowed = false;
      s += std::log(e);
    }
    if (!allowed || w <= 0.0) continue;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double e = m(word.back(), j);
      if (e <= 0.0) continue;
      const double lr = std::abs(std::log(w) - (s + std::log(e)));
      rep.max_log_ratio = std::max(rep.max_log_ratio, lr);
    }
  }
  rep.holds = rep.max_log_ratio <= log_c + 1e-12;
  return rep;
}

GurevichSequence gurevich_pressure(const TowerSpec& t, double r, int n_max, double shift, int through) {
  GurevichSequence seq;
  seq.through = through;
  const auto live = t.unholed();
  if (live.empty()) throw DomainError("gurevich_pressure: no unholed branch");
  if (through < 0 || through >= static_cast<int>(live.size())) throw DomainError("gurevich_pressure: bad branch");
  if (t.full_shift()) {
    const auto lw = log_weights(t, r);
    const double total = log_sum_exp(lw);
    for (int n = 1; n <= n_max; ++n) {
      seq.all_periodic.push_back({n, total + shift});
      const double thr = lw[static_cast<std::size_t>(through)] + (n - 1) * total;
      seq.through_branch.push_back({n, thr / n + shift});
    }
    return seq;
  }
  const Eigen::MatrixXd m = weight_matrix(t, r);
  Eigen::MatrixXd p = m;
  double log_scale = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    if (n > 1) {
      p = p * m;
      const double s = p.maxCoeff();
      if (!(s > 0.0)) throw DomainError("gurevich_pressure: weighted powers vanish");
      p /= s;
      log_scale += std::log(s);
    }
    seq.all_periodic.push_back({n, (log_scale + std::log(p.trace())) / n + shift});
    seq.through_branch.push_back({n, (log_scale + std::log(p(through, through))) / n + shift});
  }
  return seq;
}

AbramovReport abramov_check(const TowerSpec& t, const TowerMeasure& nu, double r, double tol) {
  AbramovReport rep;
  const auto k = nu.chain.rows();
  double h = 0.0;
  double logj = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& bi = t.branches[static_cast<std::size_t>(nu.states[static_cast<std::size_t>(i)])];
    for (Eigen::Index j = 0; j < k; ++j) {
      const double q = nu.chain(i, j);
      if (q <= 0.0) continue;
      h -= nu.stationary(i) * q * std::log(q);
      double lj = std::log(bi.J);
      if (t.distortion.size() != 0) {
        lj += t.distortion(nu.states[static_cast<std::size_t>(i)], nu.states[static_cast<std::size_t>(j)]);
      }
      logj += nu.stationary(i) * q * lj;
    }
  }
  rep.h_induced = h;
  rep.return_integral = nu.return_integral;
  if (!std::isfinite(rep.return_integral) || rep.return_integral <= 0.0) {
    throw ConvergenceError("abramov_check: return-time integral does not converge on the truncation");
  }
  rep.h_tower = h / rep.return_integral;
  rep.lambda_tower = logj / rep.return_integral;
  rep.pressure = rep.h_tower - rep.lambda_tower;
  rep.log_r = std::log(r);
  rep.consistent = std::abs(rep.pressure - rep.log_r) <= tol;
  return rep;
}

double bernoulli_pressure(const TowerSpec& t, const std::vector<double>& p) {
  const auto live = t.unholed();
  if (p.size() != live.size()) throw DomainError("bernoulli_pressure: probability vector has the wrong length");
  double h = 0.0;
  double lj = 0.0;
  double ir = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& b = t.branches[static_cast<std::size_t>(live[i])];
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
    lj += p[i] * std::log(b.J);
    ir += p[i] * b.R;
  }
  return (h - lj) / ir;
}

MaximizationReport pressure_maximization(const TowerSpec& t, double r, int draws, std::uint64_t seed) {
  if (!t.full_shift()) throw DomainError("pressure_maximization: needs a full-shift tower");
  MaximizationReport rep;
  const auto nu = gibbs_measure(t, r, 1);
  std::vector<double> gibbs(nu.stationary.data(), nu.stationary.data() + nu.stationary.size());
  rep.gibbs_pressure = bernoulli_pressure(t, gibbs);
  ShardRng rng(seed, 0);
  for (int d = 0; d < draws; ++d) {
    std::vector<double> p(gibbs.size());
    double s = 0.0;
    for (double& x : p) {
      x = -std::log(1.0 - rng.uniform());
      s += x;
    }
    for (double& x : p) x /= s;
    const double pr = bernoulli_pressure(t, p);
    rep.best_random = std::max(rep.best_random, pr);
    if (pr > rep.gibbs_pressure + 1e-12) ++rep.exceed;
    ++rep.draws;
  }
  return rep;
}

double level_decay_constant(const TowerSpec& t, double r, double return_integral) {
  const double q = t.theta0 / r;
  if (q >= 1.0) return kInf;
  return t.C0 / (r * (1.0 - q) * return_integral);
}

bool HypothesisReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

HypothesisReport validate_hypotheses(const TowerSpec& t, const HypothesisOptions& opt, const OpenSystem* attached) {
  HypothesisReport rep;
  const int max_r = t.max_return();

  double total_mass = 0.0;
  for (const auto& b : t.branches) total_mass += b.mass;
  rep.checks.push_back({"base_mass", total_mass <= 1.0 + 1e-12, "sum of base masses " + std::to_string(total_mass)});

  CheckResult tail{"tail_bound", true, ""};
  for (int n = 0; n <= max_r; ++n) {
    double tail_mass = 0.0;
    for (const auto& b : t.branches) {
      if (b.R > n) tail_mass += b.mass;
    }
    const double bound = t.C0 * std::pow(t.theta0, n);
    if (tail_mass > bound * (1.0 + 1e-12)) {
      tail.pass = false;
      tail.witness = "n=" + std::to_string(n) + " tail=" + std::to_string(tail_mass) + " bound=" + std::to_string(bound);
      break;
    }
  }
  rep.checks.push_back(tail);

  double r = 0.0;
  try {
    r = tower_eigenvalue(t);
  } catch (const DomainError& e) {
    rep.checks.push_back({"eigenvalue", false, e.what()});
  }

  CheckResult theta{"thetabar_range", true, ""};
  if (r > 0.0) {
    const double lo = t.theta0 / r;
    theta.pass = opt.thetabar > lo && opt.thetabar < 1.0;
    theta.witness = "thetabar=" + std::to_string(opt.thetabar) + " admissible (" + std::to_string(lo) + ", 1)";
  }
  rep.checks.push_back(theta);

  CheckResult star{"condition_star", true, ""};
  for (int n = 1; n <= max_r && star.pass; ++n) {
    for (const auto& b : t.branches) {
      if (b.R != n) continue;
      const double lhs = std::log(b.J);
      const double rhs = opt.Cbar * std::pow(opt.thetabar, -n);
      if (lhs > rhs) {
        star.pass = false;
        star.witness = "n=" + std::to_string(n) + " log J=" + std::to_string(lhs) + " > " + std::to_string(rhs);
        break;
      }
    }
  }
  rep.checks.push_back(star);

  if (r > 0.0) {
    const auto nu = gibbs_measure(t, r, 1);
    const double c = level_decay_constant(t, r, nu.return_integral);
    CheckResult decay{"level_decay", true, "C'=" + std::to_string(c)};
    for (std::size_t l = 0; l < nu.level_masses.size(); ++l) {
      const double bound = c * std::pow(t.theta0 / r, static_cast<double>(l));
      if (nu.level_masses[l] > bound * (1.0 + 1e-12)) {
        decay.pass = false;
        decay.witness = "level " + std::to_string(l) + " mass " + std::to_string(nu.level_masses[l]) + " > " +
                        std::to_string(bound);
        break;
      }
    }
    rep.checks.push_back(decay);
  }

  if (attached) {
    CheckResult h2{"approach_rate", true, ""};
    ShardRng rng(opt.seed, 0);
    long long checked = 0;
    long long violations = 0;
    const bool sing = attached->map.has_singularities();
    for (int s = 0; s < opt.orbit_samples; ++s) {
      Point p{rng.uniform(), attached->map.dimension == 2 ? rng.uniform() : 0.0};
      for (int n = 0; n <= opt.orbit_length; ++n) {
        if (attached->hole.contains(p)) break;
        double d = attached->hole_boundary_distance(p);
        if (sing) d = std::min(d, attached->map.singularity_distance(p));
        ++checked;
        if (d < opt.delta * std::pow(opt.xi1, -n)) {
          ++violations;
          if (h2.witness.empty()) h2.witness = "sample " + std::to_string(s) + " step " + std::to_string(n);
        }
        if (sing && attached->map.singularity_distance(p) < kSingularGuard) break;
        p = attached->map.evaluate(p);
      }
    }
    const double frac = checked ? static_cast<double>(violations) / static_cast<double>(checked) : 0.0;
    h2.pass = frac < 0.01;
    h2.witness = "violation fraction " + std::to_string(frac) + (h2.witness.empty() ? "" : ", first at " + h2.witness);
    rep.checks.push_back(h2);
  }
  return rep;
}

double separation_beta(const TowerSpec& t) {
  const double b = std::max(t.theta0, std::sqrt(t.alpha)) + 0.01;
  return std::min(b, 0.999);
}

double symbolic_distance(const TowerSpec& t, const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t s = 0;
  while (s < a.size() && s < b.size() && a[s] == b[s]) ++s;
  if (s == a.size() && s == b.size()) return 0.0;
  return std::pow(separation_beta(t), static_cast<double>(s));
}

TowerSpec tower_from_json(const nlohmann::json& j) {
  const std::string where = "tower";
  require_known_keys(j, {"branches", "C0", "theta0", "C1", "alpha", "transition", "distortion"}, where);
  TowerSpec t;
  if (!j.contains("branches") || !j.at("branches").is_array()) throw ConfigError("tower.branches: missing array");
  int idx = 0;
  for (const auto& b : j.at("branches")) {
    const std::string bw = where + ".branches[" + std::to_string(idx) + "]";
    require_known_keys(b, {"id", "R", "J", "mass", "holed"}, bw);
    TowerBranch br;
    br.id = optional_field<std::string>(b, "id", std::to_string(idx), bw);
    br.R = require_field<int>(b, "R", bw);
    br.J = require_field<double>(b, "J", bw);
    br.mass = optional_field<double>(b, "mass", 1.0 / br.J, bw);
    br.holed = optional_field<bool>(b, "holed", false, bw);
    if (br.R < 1) throw ConfigError(bw + ".R: must be a positive integer");
    if (!(br.J >= 1.0)) throw ConfigError(bw + ".J: must be at least 1");
    if (!(br.mass >= 0.0)) throw ConfigError(bw + ".mass: must be nonnegative");
    t.branches.push_back(br);
    ++idx;
  }
  t.C0 = optional_field<double>(j, "C0", 1.0, where);
  t.theta0 = optional_field<double>(j, "theta0", 0.5, where);
  t.C1 = optional_field<double>(j, "C1", 0.0, where);
  t.alpha = optional_field<double>(j, "alpha", 0.5, where);
  const auto nb = static_cast<Eigen::Index>(t.branches.size());
  auto read_matrix = [&](const char* key) {
    Eigen::MatrixXd m;
    if (!j.contains(key)) return m;
    const auto rows = j.at(key).get<std::vector<std::vector<double>>>();
    if (static_cast<Eigen::Index>(rows.size()) != nb) throw ConfigError(where + "." + key + ": wrong row count");
    m.resize(nb, nb);
    for (Eigen::Index i = 0; i < nb; ++i) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != nb) {
        throw ConfigError(where + "." + key + ": wrong column count in row " + std::to_string(i));
      }
      for (Eigen::Index c = 0; c < nb; ++c) m(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
    }
    return m;
  };
  t.transition = read_matrix("transition");
  t.distortion = read_matrix("distortion");
  return t;
}

nlohmann::json to_json(const TowerSpec& t) {
  nlohmann::json j;
  nlohmann::json bs = nlohmann::json::array();
  for (const auto& b : t.branches) {
    bs.push_back({{"id", b.id}, {"R", b.R}, {"J", b.J}, {"mass", b.mass}, {"holed", b.holed}});
  }
  j["branches"] = bs;
  j["C0"] = t.C0;
  j["theta0"] = t.theta0;
  j["C1"] = t.C1;
  j["alpha"] = t.alpha;
  auto write_matrix = [](const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) rows[static_cast<std::size_t>(i)].push_back(m(i, c));
    }
    return rows;
  };
  if (t.transition.size() != 0) j["transition"] = write_matrix(t.transition);
  if (t.distortion.size() != 0) j["distortion"] = write_matrix(t.distortion);
  return j;
}

TowerSpec golden_mean_tower() {
  TowerSpec t;
  t.branches = {{"0", 1, 2.0, 0.5, false}, {"10", 2, 4.0, 0.25, false}, {"11", 2, 4.0, 0.25, true}};
  t.C0 = 1.0;
  t.theta0 = 0.5;
  return t;
}

}  // namespace openrate
