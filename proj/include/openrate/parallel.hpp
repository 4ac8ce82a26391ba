#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace openrate {

/// SplitMix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Random stream for one shard. The stream depends only on (seed, shard),
/// never on which worker runs it.
class ShardRng {
 public:
  ShardRng(std::uint64_t seed, std::uint64_t shard) : engine_(mix_seed(mix_seed(seed) ^ mix_seed(~shard))) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Default number of samples per Monte Carlo shard. Fixed so that results do
/// not depend on the worker count.
constexpr std::size_t kShardSize = 1 << 14;

inline std::size_t shard_count(std::size_t samples, std::size_t shard_size = kShardSize) {
  return (samples + shard_size - 1) / shard_size;
}

/// Runs body(shard) for shard in [0, shards) on `workers` threads. Callers
/// store per-shard results and reduce them in shard order afterwards.
template <typename Body>
void for_each_shard(std::size_t shards, int workers, Body&& body) {
  const std::size_t nthreads = std::clamp<std::size_t>(workers < 1 ? 1 : static_cast<std::size_t>(workers), 1, shards == 0 ? 1 : shards);
  if (nthreads <= 1) {
    for (std::size_t s = 0; s < shards; ++s) body(s);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t s = next.fetch_add(1);
        if (s >= shards) return;
        try {
          body(s);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace openrate
