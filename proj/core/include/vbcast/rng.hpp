#pragma once

#include <cstdint>

namespace vbcast {

/// Counter based pseudo random generator built on the SplitMix64 finaliser.
///
/// Every draw hashes (seed, counter), so a stream is a pure function of its
/// seed and the number of draws made so far. Child streams obtained through
/// split() are statistically independent of the parent and of each other,
/// which lets Monte Carlo loops assign one stream per sample index and stay
/// reproducible under any batching or evaluation order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  /// Next raw 64-bit word.
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal deviate via the Box-Muller transform.
  double normal();

  /// Independent child stream for the given index. Deterministic: the same
  /// (seed, stream) pair always yields the same child.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace vbcast
