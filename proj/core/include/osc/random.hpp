#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace osc {

// Seeded, splittable random source. A source is identified by (seed, stream):
// the same pair always reproduces the same draws, and forked child streams are
// independent of the parent's draw position, so parallel work that forks by
// index is reproducible regardless of scheduling.
//
// All variate generation is implemented on top of the raw mt19937_64 output so
// results do not depend on the standard library's distribution implementations.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0);

  // Child source derived from (seed, stream, substream). Does not consume draws.
  RandomSource fork(std::uint64_t substream) const;
  RandomSource fork(std::string_view name) const;

  // Uniform on [0, 1).
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer on {0, ..., bound-1}; bound must be >= 1.
  std::uint64_t uniform_int(std::uint64_t bound);
  double normal(double mean = 0.0, double stddev = 1.0);
  bool bernoulli(double p);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Stable 64-bit hash used for named streams.
  static std::uint64_t hash_name(std::string_view name);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace osc
