#pragma once

// Hand-rolled generators for property tests.

#include <cstdint>
#include <string>
#include <vector>

namespace gen {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : s_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int range(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }
  bool coin() { return (next() & 1) != 0; }

  std::string word(int base, int len) {
    std::string w;
    for (int i = 0; i < len; ++i) w.push_back(static_cast<char>('0' + range(0, base - 1)));
    return w;
  }
  /// A probability vector with every entry >= floor.
  std::vector<double> simplex(int k, double floor = 0.0) {
    std::vector<double> p(static_cast<std::size_t>(k));
    double s = 0.0;
    for (auto& v : p) s += (v = floor + uniform());
    for (auto& v : p) v /= s;
    return p;
  }

 private:
  std::uint64_t s_;
};

}  // namespace gen
