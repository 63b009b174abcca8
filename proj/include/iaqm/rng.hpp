#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace iaqm::sim {

/// Derives the seed of a named sub-stream from a master seed:
/// splitmix64(master ^ fnv1a64(label)). Streams used by the simulator are
/// labelled "topology", "traffic", "tuner", "predictor", "fq_hash".
uint64_t derive_seed(uint64_t master, std::string_view label);

uint64_t splitmix64(uint64_t x);

/// Seeded pseudo-random stream (mt19937_64 underneath).
class RandomStream {
 public:
  explicit RandomStream(uint64_t seed) : engine_(seed) {}
  RandomStream(uint64_t master, std::string_view label)
      : engine_(derive_seed(master, label)) {}

  uint64_t next() { return engine_(); }
  /// Uniform in [lo, hi).
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  /// Uniform integer in [lo, hi].
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }
  int64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<int64_t>(mean)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace iaqm::sim
