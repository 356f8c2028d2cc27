// Deterministic random source. All randomized components draw through this
// wrapper instead of std::uniform_*_distribution so that streams are
// reproducible across standard library implementations, not just across runs.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mcfs/errors.hpp"

namespace mcfs {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n). Rejection sampling keeps the draw unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ContractError("Rng::below called with n == 0");
    std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  bool coin() { return (next_u64() & 1ULL) != 0; }

  // Uniform real in [0, 1) with 53 bits of precision.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Index drawn from an unnormalized nonnegative weight vector.
  std::size_t weighted_pick(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw ContractError("weighted_pick: negative weight");
      total += w;
    }
    if (total <= 0.0) throw ContractError("weighted_pick: zero total weight");
    double x = uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (x < acc) return i;
    }
    return weights.size() - 1;
  }

  // Independent child stream; tag distinguishes siblings of one parent.
  Rng child(std::uint64_t tag) {
    return Rng(splitmix64(seed_ ^ splitmix64(tag + 0x51ed2701a2b5e3fULL)));
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

}  // namespace mcfs
