#include "openrate/escape.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace openrate {

std::string to_string(EscapeMethod m) {
  switch (m) {
    case EscapeMethod::grid:
      return "grid";
    case EscapeMethod::monte_carlo:
      return "monte_carlo";
    case EscapeMethod::word_count:
      return "word_count";
  }
  return "grid";
}

EscapeMethod escape_method_from_string(const std::string& s) {
  if (s == "grid") return EscapeMethod::grid;
  if (s == "monte_carlo") return EscapeMethod::monte_carlo;
  if (s == "word_count") return EscapeMethod::word_count;
  throw ConfigError("unknown escape method '" + s + "'");
}

namespace {

FitWindow resolve_window(FitWindow w, int n_max) {
  if (n_max < 1) throw DomainError("escape: n_max must be at least 1");
  if (w.n_max == 0) {
    w.n_max = n_max;
    w.n_min = std::max(1, n_max / 4);
  }
  if (w.n_min < 1 || w.n_max > n_max || w.n_min >= w.n_max) {
    throw DomainError("escape: window [" + std::to_string(w.n_min) + ", " + std::to_string(w.n_max) +
                      "] is not inside [1, " + std::to_string(n_max) + "] or is too short");
  }
  return w;
}

}  // namespace

double ols_slope(const std::vector<double>& x, const std::vector<double>& y, double* slope_stderr) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw DegenerateFitError("ols_slope: need at least two points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw DegenerateFitError("ols_slope: all abscissae equal");
  const double b = sxy / sxx;
  if (slope_stderr) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - my - b * (x[i] - mx);
      rss += r * r;
    }
    *slope_stderr = n > 2 ? std::sqrt(rss / static_cast<double>(n - 2) / sxx) : 0.0;
  }
  return b;
}

double local_slope(const EscapeEstimate& e, std::size_t n) {
  return std::log(e.per_n_mass[n].second) - std::log(e.per_n_mass[n - 1].second);
}

void fit_escape(EscapeEstimate& e) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [n, mass] : e.per_n_mass) {
    if (n < e.window.n_min || n > e.window.n_max) continue;
    if (!(mass >= 1e-300)) {
      throw DegenerateFitError("escape: m(M^" + std::to_string(n) + ") = " + std::to_string(mass) +
                               " underflows inside the fit window");
    }
    xs.push_back(n);
    ys.push_back(std::log(mass));
  }
  e.rho = ols_slope(xs, ys, &e.std_error);
  double lo = e.rho;
  double hi = e.rho;
  for (std::size_t i = 0; i < e.per_n_mass.size(); ++i) {
    const int n = e.per_n_mass[i].first;
    if (n <= e.window.n_min || n > e.window.n_max) continue;
    const double s = local_slope(e, i);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  e.rho_lower = lo;
  e.rho_upper = hi;
}

EscapeEstimate escape_rate_grid(const OpenSystem& sys, const GridMeasure& m, int n_max, FitWindow window,
                                const UlamOperator* op) {
  EscapeEstimate e;
  e.method = EscapeMethod::grid;
  e.window = resolve_window(window, n_max);
  UlamOperator local;
  if (!op) {
    local = build_ulam(sys, m.grid.n);
    op = &local;
  }
  if (op->grid.size() != m.mass.size()) throw DomainError("escape_rate_grid: measure and operator grids differ");
  Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(m.mass.data(), static_cast<Eigen::Index>(m.mass.size()));
  for (int n = 0; n <= n_max; ++n) {
    u = op->push(u);
    e.per_n_mass.emplace_back(n, u.sum());
  }
  // Rounding can make an exactly constant sequence wobble in the last bit.
  for (std::size_t i = 1; i < e.per_n_mass.size(); ++i) {
    e.per_n_mass[i].second = std::min(e.per_n_mass[i].second, e.per_n_mass[i - 1].second);
  }
  fit_escape(e);
  return e;
}

PointSampler uniform_sampler(int dimension) {
  if (dimension == 1) {
    return [](ShardRng& rng) { return Point{rng.uniform(), 0.0}; };
  }
  return [](ShardRng& rng) {
    const double x = rng.uniform();
    return Point{x, rng.uniform()};
  };
}

EscapeEstimate escape_rate_mc(const OpenSystem& sys, const PointSampler& sampler, int n_max, const McOptions& opt,
                              FitWindow window) {
  if (opt.samples < 10'000) throw DomainError("escape_rate_mc: at least 10^4 samples are required");
  if (sys.map.float_horizon > 0 && n_max > sys.map.float_horizon - 8) {
    const int capped = sys.map.float_horizon - 8;
    if (window.n_max > capped) {
      throw DomainError("escape_rate_mc: window ends at " + std::to_string(window.n_max) +
                        " but double orbits of this map are only valid to n = " + std::to_string(capped));
    }
    n_max = capped;
  }
  const std::size_t shards = shard_count(static_cast<std::size_t>(opt.samples));
  const std::size_t len = static_cast<std::size_t>(n_max) + 2;
  std::vector<std::vector<long long>> ends(shards, std::vector<long long>(len, 0));
  std::vector<long long> singular(shards, 0);
  for_each_shard(shards, opt.workers, [&](std::size_t s) {
    ShardRng rng(opt.seed, s);
    const std::size_t begin = s * kShardSize;
    const std::size_t end = std::min<std::size_t>(begin + kShardSize, static_cast<std::size_t>(opt.samples));
    auto& hist = ends[s];
    for (std::size_t k = begin; k < end; ++k) {
      const Point x = sampler(rng);
      const int t = survival_time(sys, x, n_max);
      if (t == -2) {
        ++singular[s];
      } else if (t == -1) {
        ++hist[len - 1];
      } else {
        ++hist[static_cast<std::size_t>(t)];
      }
    }
  });
  // hist[t] counts escapes at step t; the last slot counts full survivors.
  std::vector<long long> total(len, 0);
  long long sing = 0;
  for (std::size_t s = 0; s < shards; ++s) {
    for (std::size_t i = 0; i < len; ++i) total[i] += ends[s][i];
    sing += singular[s];
  }
  return escape_from_histogram(total, opt.samples, sing, n_max, window);
}

EscapeEstimate escape_from_histogram(const std::vector<long long>& total, long long samples, long long sing, int n_max,
                                     FitWindow window) {
  const std::size_t len = static_cast<std::size_t>(n_max) + 2;
  if (total.size() != len) throw DomainError("escape_from_histogram: histogram length must be n_max + 2");
  EscapeEstimate e;
  e.method = EscapeMethod::monte_carlo;
  e.window = resolve_window(window, n_max);
  const long long valid = samples - sing;
  if (valid <= 0) throw InsufficientSamplesError("escape_rate_mc: every sample hit the singularity set");
  e.samples = samples;
  e.singular_samples = sing;
  // Survivors of M^n are the samples with escape time > n.
  std::vector<long long> alive(static_cast<std::size_t>(n_max) + 1, 0);
  long long running = total[len - 1];
  for (int n = n_max; n >= 0; --n) {
    alive[static_cast<std::size_t>(n)] = running;
    running += total[static_cast<std::size_t>(n)];
  }
  const double nv = static_cast<double>(valid);
  for (int n = 0; n <= n_max; ++n) e.per_n_mass.emplace_back(n, static_cast<double>(alive[static_cast<std::size_t>(n)]) / nv);
  // A default window stops where fewer than 100 samples remain: beyond
  // that the log of the count is dominated by its discreteness.
  if (window.n_max == 0) {
    while (e.window.n_max > e.window.n_min + 2 && alive[static_cast<std::size_t>(e.window.n_max)] < 100) {
      --e.window.n_max;
    }
  }
  if (alive[static_cast<std::size_t>(e.window.n_min)] < 100) {
    throw InsufficientSamplesError("escape_rate_mc: only " + std::to_string(alive[static_cast<std::size_t>(e.window.n_min)]) +
                                   " samples survive to n = " + std::to_string(e.window.n_min));
  }
  for (int n = e.window.n_min; n <= e.window.n_max; ++n) {
    if (alive[static_cast<std::size_t>(n)] == 0) {
      throw InsufficientSamplesError("escape_rate_mc: no survivors at n = " + std::to_string(n) +
                                     " inside the fit window");
    }
  }
  fit_escape(e);

  // Delta method: Cov(log p_a, log p_b) = (1 - p_a) / (N p_a) for a <= b.
  const int w0 = e.window.n_min;
  const int w1 = e.window.n_max;
  const double mean_n = 0.5 * (w0 + w1);
  double sxx = 0.0;
  for (int n = w0; n <= w1; ++n) sxx += (n - mean_n) * (n - mean_n);
  double var = 0.0;
  for (int a = w0; a <= w1; ++a) {
    const double ca = (a - mean_n) / sxx;
    const double pa = e.per_n_mass[static_cast<std::size_t>(a)].second;
    const double cov = (1.0 - pa) / (nv * pa);
    // Diagonal plus twice the sum over b > a.
    double tail = 0.0;
    for (int b = a + 1; b <= w1; ++b) tail += (b - mean_n) / sxx;
    var += ca * cov * (ca + 2.0 * tail);
  }
  e.std_error = std::sqrt(std::max(0.0, var));
  return e;
}

double word_growth_rate(const OpenSystem& sys) {
  const int m = sys.map.alphabet;
  if (m < 1) throw ConfigError("word_growth_rate: model has no Markov coding");
  if (sys.hole.empty()) return m;
  if (sys.hole.kind() != HoleKind::cylinder_union || sys.hole.alphabet() != m) {
    throw ConfigError("word_growth_rate: hole " + sys.hole.describe() + " is not a compatible cylinder union");
  }
  const int k = sys.hole.level();
  int states = 1;
  for (int i = 0; i < k - 1; ++i) states *= m;
  std::vector<char> forbidden(static_cast<std::size_t>(states) * static_cast<std::size_t>(m), 0);
  for (const auto& f : sys.hole.words()) {
    int code = 0;
    for (int d : f) code = code * m + d;
    forbidden[static_cast<std::size_t>(code)] = 1;
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(states, states);
  for (int s = 0; s < states; ++s) {
    for (int d = 0; d < m; ++d) {
      const int full = s * m + d;
      if (!forbidden[static_cast<std::size_t>(full)]) a(s, full % states) += 1.0;
    }
  }
  if (states == 1) return a(0, 0);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  double best = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) best = std::max(best, std::abs(es.eigenvalues()(i)));
  return best;
}

EscapeEstimate escape_rate_words(const OpenSystem& sys, int n_max, FitWindow window) {
  EscapeEstimate e;
  e.method = EscapeMethod::word_count;
  e.window = resolve_window(window, n_max);
  const int m = sys.map.alphabet;
  const int k = sys.hole.empty() ? 1 : sys.hole.level();
  // x in M^n iff the first n + k symbols of x avoid every forbidden factor.
  for (int n = 0; n <= n_max; ++n) {
    const double count = count_markov_words(sys, n + k);
    e.per_n_mass.emplace_back(n, std::exp(std::log(count) - (n + k) * std::log(static_cast<double>(m))));
  }
  const double lambda = word_growth_rate(sys);
  if (!(lambda > 0.0)) throw DegenerateFitError("escape_rate_words: survivor shift is empty");
  fit_escape(e);
  e.rho = std::log(lambda / m);
  e.std_error = 0.0;
  e.rho_lower = std::min(e.rho_lower, e.rho);
  e.rho_upper = std::max(e.rho_upper, e.rho);
  return e;
}

void write_escape_csv(std::ostream& os, const EscapeEstimate& e) {
  os << "n,mass,log_mass,cumulative_slope\n";
  char buf[160];
  const double log0 = e.per_n_mass.empty() ? 0.0 : std::log(e.per_n_mass.front().second);
  for (const auto& [n, mass] : e.per_n_mass) {
    const double lm = std::log(mass);
    const double cs = n == 0 ? 0.0 : (lm - log0) / n;
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", n, mass, lm, cs);
    os << buf;
  }
}

std::vector<std::pair<int, double>> read_escape_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("n,mass", 0) != 0) throw ConfigError("escape csv: missing header");
  std::vector<std::pair<int, double>> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a;
    std::string b;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',')) {
      throw ConfigError("escape csv: malformed line " + std::to_string(lineno));
    }
    out.emplace_back(std::stoi(a), std::strtod(b.c_str(), nullptr));
  }
  return out;
}

nlohmann::json to_json(const EscapeEstimate& e) {
  nlohmann::json j;
  j["rho"] = e.rho;
  j["stderr"] = e.std_error;
  j["method"] = to_string(e.method);
  j["window"] = {e.window.n_min, e.window.n_max};
  j["rho_lower"] = e.rho_lower;
  j["rho_upper"] = e.rho_upper;
  j["samples"] = e.samples;
  j["singular_samples"] = e.singular_samples;
  nlohmann::json masses = nlohmann::json::array();
  for (const auto& [n, mass] : e.per_n_mass) masses.push_back({n, mass});
  j["per_n_mass"] = masses;
  return j;
}

EscapeEstimate escape_from_json(const nlohmann::json& j) {
  EscapeEstimate e;
  e.rho = j.at("rho").get<double>();
  e.std_error = j.at("stderr").get<double>();
  e.method = escape_method_from_string(j.at("method").get<std::string>());
  e.window.n_min = j.at("window").at(0).get<int>();
  e.window.n_max = j.at("window").at(1).get<int>();
  e.rho_lower = j.at("rho_lower").get<double>();
  e.rho_upper = j.at("rho_upper").get<double>();
  e.samples = j.value("samples", 0LL);
  e.singular_samples = j.value("singular_samples", 0LL);
  for (const auto& p : j.at("per_n_mass")) e.per_n_mass.emplace_back(p.at(0).get<int>(), p.at(1).get<double>());
  return e;
}

}  // namespace openrate
