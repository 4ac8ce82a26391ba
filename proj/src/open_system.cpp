#include "openrate/open_system.hpp"

#include <cmath>
#include <functional>

namespace openrate {

namespace {

void require_markov_hole(const OpenSystem& sys) {
  if (sys.hole.kind() == HoleKind::none) return;
  if (sys.hole.kind() != HoleKind::cylinder_union) {
    throw ConfigError("markov word counting needs a cylinder_union hole, got " + sys.hole.describe());
  }
  if (sys.map.alphabet != sys.hole.alphabet()) {
    throw ConfigError("cylinder hole alphabet " + std::to_string(sys.hole.alphabet()) +
                      " does not match the model coding (" + std::to_string(sys.map.alphabet) + ")");
  }
}

int hole_level(const OpenSystem& sys) { return sys.hole.empty() ? 1 : sys.hole.level(); }

}  // namespace

Trajectory iterate(const OpenSystem& sys, const Point& x, int n) {
  if (n < 0) throw DomainError("iterate: negative step count");
  if (sys.map.singularity_distance(x) < kSingularGuard) {
    throw DomainError("iterate: starting point lies on the singularity set");
  }
  Trajectory t;
  t.points.reserve(static_cast<size_t>(n) + 1);
  Point p = x;
  for (int i = 0;; ++i) {
    t.points.push_back(p);
    if (sys.hole.contains(p)) {
      t.escape_step = i;
      break;
    }
    if (i == n) break;
    if (i > 0 && sys.map.singularity_distance(p) < kSingularGuard) {
      t.singular_step = i;
      break;
    }
    p = sys.map.evaluate(p);
  }
  return t;
}

SurvivalStatus survival_status(const OpenSystem& sys, const Point& x, int n) {
  Point p = x;
  for (int i = 0; i <= n; ++i) {
    if (sys.hole.contains(p)) return SurvivalStatus::escaped;
    if (sys.map.singularity_distance(p) < kSingularGuard) return SurvivalStatus::singular;
    if (i < n) p = sys.map.evaluate(p);
  }
  return SurvivalStatus::survived;
}

int survival_time(const OpenSystem& sys, const Point& x, int horizon) {
  Point p = x;
  for (int i = 0; i <= horizon; ++i) {
    if (sys.hole.contains(p)) return i;
    if (sys.map.singularity_distance(p) < kSingularGuard) return -2;
    if (i < horizon) p = sys.map.evaluate(p);
  }
  return -1;
}

bool survivor_indicator(const OpenSystem& sys, const Point& x, int n, SingularPolicy policy) {
  if (n < 0) throw DomainError("survivor_indicator: negative n");
  const SurvivalStatus s = survival_status(sys, x, n);
  if (s == SurvivalStatus::singular && policy == SingularPolicy::raise) {
    throw DomainError("survivor_indicator: orbit reaches the singularity set before step n");
  }
  return s == SurvivalStatus::survived;
}

std::vector<int> itinerary(const MapModel& map, const Point& x, int length) {
  if (!map.symbol) throw ConfigError("model '" + map.label + "' has no symbolic coding");
  std::vector<int> w;
  w.reserve(static_cast<size_t>(length));
  Point p = x;
  for (int i = 0; i < length; ++i) {
    w.push_back(map.symbol(p));
    p = map.evaluate(p);
  }
  return w;
}

bool word_avoids_hole(const HoleSpec& hole, const std::vector<int>& word) {
  if (hole.empty()) return true;
  const int k = hole.level();
  for (size_t i = 0; i + static_cast<size_t>(k) <= word.size(); ++i) {
    for (const auto& f : hole.words()) {
      bool match = true;
      for (int j = 0; j < k && match; ++j) match = word[i + static_cast<size_t>(j)] == f[static_cast<size_t>(j)];
      if (match) return false;
    }
  }
  return true;
}

std::vector<std::string> markov_words(const OpenSystem& sys, int n) {
  require_markov_hole(sys);
  if (n < 0) throw DomainError("markov_words: negative depth");
  const int m = sys.map.alphabet;
  std::vector<std::string> out;
  std::vector<int> word;
  // Depth-first extension, pruning as soon as a forbidden factor appears.
  std::function<void()> extend = [&]() {
    if (static_cast<int>(word.size()) == n) {
      std::string s;
      for (int d : word) s.push_back(static_cast<char>('0' + d));
      out.push_back(std::move(s));
      return;
    }
    for (int d = 0; d < m; ++d) {
      word.push_back(d);
      const int k = hole_level(sys);
      bool ok = true;
      if (!sys.hole.empty() && static_cast<int>(word.size()) >= k) {
        std::vector<int> tail(word.end() - k, word.end());
        ok = word_avoids_hole(sys.hole, tail);
      }
      if (ok) extend();
      word.pop_back();
    }
  };
  extend();
  return out;
}

double count_markov_words(const OpenSystem& sys, int n) {
  require_markov_hole(sys);
  if (n < 0) throw DomainError("count_markov_words: negative depth");
  const int m = sys.map.alphabet;
  const int k = hole_level(sys);
  if (sys.hole.empty() || n < k) return std::pow(static_cast<double>(m), n);
  // States are (k-1)-words encoded base m; appending a digit shifts the window.
  int states = 1;
  for (int i = 0; i < k - 1; ++i) states *= m;
  std::vector<char> forbidden(static_cast<size_t>(states) * m, 0);
  for (const auto& f : sys.hole.words()) {
    int code = 0;
    for (int d : f) code = code * m + d;
    forbidden[static_cast<size_t>(code)] = 1;
  }
  std::vector<double> count(static_cast<size_t>(states), 1.0);
  for (int len = k - 1; len < n; ++len) {
    std::vector<double> next(static_cast<size_t>(states), 0.0);
    for (int s = 0; s < states; ++s) {
      if (count[static_cast<size_t>(s)] == 0.0) continue;
      for (int d = 0; d < m; ++d) {
        const int full = s * m + d;
        if (forbidden[static_cast<size_t>(full)]) continue;
        next[static_cast<size_t>(full % states)] += count[static_cast<size_t>(s)];
      }
    }
    count = std::move(next);
  }
  double total = 0.0;
  for (double c : count) total += c;
  return total;
}

}  // namespace openrate
