#pragma once

#include "openrate/grid.hpp"
#include "openrate/open_system.hpp"
#include "openrate/parallel.hpp"
#include "openrate/ulam.hpp"

#include <json.hpp>

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace openrate {

enum class EscapeMethod { grid, monte_carlo, word_count };

std::string to_string(EscapeMethod m);
EscapeMethod escape_method_from_string(const std::string& s);

/// Fit window [n_min, n_max]. A zero n_max means "use the default",
/// [n_max / 4, n_max] of the run.
struct FitWindow {
  int n_min = 0;
  int n_max = 0;
};

struct EscapeEstimate {
  /// Slope of log m(M^n); the escape rate is -rho.
  double rho = 0.0;
  double std_error = 0.0;
  EscapeMethod method = EscapeMethod::grid;
  FitWindow window;
  /// (n, m(M^n)) for n = 0..n_max.
  std::vector<std::pair<int, double>> per_n_mass;
  /// Running min / max of the one-step slopes log m(M^n) - log m(M^{n-1})
  /// inside the window, widened to contain rho.
  double rho_lower = 0.0;
  double rho_upper = 0.0;
  /// Monte Carlo bookkeeping.
  long long samples = 0;
  long long singular_samples = 0;
};

/// One-step slope at index n of per_n_mass (n >= 1).
double local_slope(const EscapeEstimate& e, std::size_t n);

/// Pushes `m` through the Ulam operator: m(M^n) = sum(m P^{n+1}). If `op` is
/// null the operator is assembled at the grid of `m`.
EscapeEstimate escape_rate_grid(const OpenSystem& sys, const GridMeasure& m, int n_max, FitWindow window = {},
                                const UlamOperator* op = nullptr);

using PointSampler = std::function<Point(ShardRng&)>;

/// Lebesgue (or reference) sampler on [0,1) or the torus.
PointSampler uniform_sampler(int dimension);

struct McOptions {
  long long samples = 1'000'000;
  std::uint64_t seed = 1;
  int workers = 1;
};

/// Surviving fraction of i.i.d. samples. The standard error propagates the
/// multinomial covariance of the nested survival events through the slope.
/// Orbits are cut at the model's float horizon (minus 8 steps); a default
/// window also ends at the last n with 100 survivors.
EscapeEstimate escape_rate_mc(const OpenSystem& sys, const PointSampler& sampler, int n_max, const McOptions& opt,
                              FitWindow window = {});

/// Monte Carlo estimate from escape-time counts: total[t] samples escaped at
/// step t (t <= n_max), total[n_max + 1] survived every step.
EscapeEstimate escape_from_histogram(const std::vector<long long>& total, long long samples, long long singular,
                                     int n_max, FitWindow window = {});

/// Exact rate log(lambda_A / m) for cylinder holes, with m(M^n) from word
/// counts.
EscapeEstimate escape_rate_words(const OpenSystem& sys, int n_max, FitWindow window = {});

/// Spectral radius of the surviving-word transfer matrix.
double word_growth_rate(const OpenSystem& sys);

/// Shared fitting step: fills rho, std_error (unweighted least squares),
/// rho_lower and rho_upper from per_n_mass.
void fit_escape(EscapeEstimate& e);

/// Least-squares slope of y against x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y, double* slope_stderr = nullptr);

/// CSV: n, mass, log_mass, cumulative_slope.
void write_escape_csv(std::ostream& os, const EscapeEstimate& e);
std::vector<std::pair<int, double>> read_escape_csv(std::istream& is);

nlohmann::json to_json(const EscapeEstimate& e);
EscapeEstimate escape_from_json(const nlohmann::json& j);

}  // namespace openrate
