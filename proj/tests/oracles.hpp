#pragma once

// Independent reference values for the unit and acceptance tests. Nothing
// here calls the library: counts are brute force, constants closed form.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

inline const double kPhi = (1.0 + std::sqrt(5.0)) / 2.0;
/// Leading eigenvalue of [[1,1],[1,0]] / 2.
inline const double kGoldenR = kPhi / 2.0;
inline const double kGoldenRho = std::log(kPhi / 2.0);
inline const double kGoldenH = std::log(kPhi);
inline const double kLog2 = std::log(2.0);
inline const double kCatExpansion = std::log((3.0 + std::sqrt(5.0)) / 2.0);

inline std::string digits(std::uint64_t code, int base, int len) {
  std::string w(static_cast<std::size_t>(len), '0');
  for (int i = len - 1; i >= 0; --i) {
    w[static_cast<std::size_t>(i)] = static_cast<char>('0' + code % static_cast<std::uint64_t>(base));
    code /= static_cast<std::uint64_t>(base);
  }
  return w;
}

/// Number of length-n words over {0..base-1} containing none of `forbidden`
/// as a factor, by enumeration.
inline long long count_words(int base, const std::vector<std::string>& forbidden, int n) {
  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::uint64_t>(base);
  long long count = 0;
  for (std::uint64_t c = 0; c < total; ++c) {
    const std::string w = digits(c, base, n);
    bool ok = true;
    for (const auto& f : forbidden) ok = ok && w.find(f) == std::string::npos;
    count += ok ? 1 : 0;
  }
  return count;
}

/// Fibonacci with F(1) = F(2) = 1.
inline long long fibonacci(int n) {
  long long a = 0;
  long long b = 1;
  for (int i = 0; i < n; ++i) {
    const long long t = a + b;
    a = b;
    b = t;
  }
  return a;
}

/// Lebesgue measure of M^n for an m-adic map with a union of level-k
/// cylinders as hole: the first n + k digits avoid every forbidden word.
inline double cylinder_survivor_mass(int base, const std::vector<std::string>& forbidden, int level, int n) {
  return static_cast<double>(count_words(base, forbidden, n + level)) / std::pow(base, n + level);
}

/// m(M^n) for x -> 3x with hole (1/3, 2/3).
inline double triadic_mass(int n) { return std::pow(2.0 / 3.0, n + 1); }

/// Ulam matrix entry of x -> m x mod 1 on an N-cell grid (N divisible by m
/// not required): fraction of cell i mapped into cell j.
inline double madic_ulam_entry(int m, int N, int i, int j) {
  // Image of cell i is [m i / N, m (i+1) / N) mod 1, length m / N, covering
  // cells m i .. m i + m - 1 mod N exactly when cells are aligned.
  double s = 0.0;
  for (int k = 0; k < m; ++k) {
    if ((m * i + k) % N == j) s += 1.0 / m;
  }
  return s;
}

/// Survival probability of x under the doubling map with hole (a, b), by
/// exact iteration of the midpoints (2k + 1) / 2^(bits + 1) of the dyadic
/// cells. Exact while n + 2 < bits and a, b are coarse dyadic rationals.
inline double dyadic_survival_fraction(double a, double b, int n, int bits) {
  const std::uint64_t den = 1ULL << (bits + 1);
  long long alive = 0;
  for (std::uint64_t k = 0; k < den / 2; ++k) {
    std::uint64_t x = 2 * k + 1;
    bool ok = true;
    for (int i = 0; i <= n && ok; ++i) {
      const double xv = static_cast<double>(x) / static_cast<double>(den);
      ok = !(xv > a && xv < b);
      x = (2 * x) % den;
    }
    alive += ok ? 1 : 0;
  }
  return static_cast<double>(alive) / static_cast<double>(den / 2);
}

/// Entropy of the stationary Markov chain with stochastic matrix p.
inline double markov_entropy(const std::vector<std::vector<double>>& p) {
  const std::size_t k = p.size();
  std::vector<double> pi(k, 1.0 / static_cast<double>(k));
  for (int it = 0; it < 20000; ++it) {
    std::vector<double> nx(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) nx[j] += pi[i] * p[i][j];
    for (std::size_t i = 0; i < k; ++i) pi[i] = 0.5 * (pi[i] + nx[i]);
  }
  double h = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (p[i][j] > 0.0) h -= pi[i] * p[i][j] * std::log(p[i][j]);
  return h;
}

/// First hit time of the ray (x, y) + t (vx, vy), t > 0, on a circle of
/// radius R at the origin, by bisection on the sign of the distance.
inline double ray_circle_time(double x, double y, double vx, double vy, double cx, double cy, double R) {
  // Minimize distance along the ray, then bisect on [0, t_closest].
  const double tc = (cx - x) * vx + (cy - y) * vy;
  if (tc <= 0.0) return -1.0;
  auto d = [&](double t) { return std::hypot(x + t * vx - cx, y + t * vy - cy) - R; };
  if (d(tc) > 0.0) return -1.0;
  double lo = 0.0;
  double hi = tc;
  if (d(lo) < 0.0) return -1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (d(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracle
