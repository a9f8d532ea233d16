// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace raydn {

// Counter-based deterministic generator: the SplitMix64 finalizer applied to
// key + counter * golden-ratio increment. Identical seeds yield identical
// streams on every platform (integer arithmetic only up to the uniform
// doubles). Substreams for parallel consumers are derived by hashing
// (seed, stream index) so they are statistically independent and never
// advance each other.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : key_(seed) {}

  // Independent stream keyed by (seed, stream_index).
  static SeededRng substream(std::uint64_t seed, std::uint64_t stream_index);

  // New generator derived from this one's key and `key`; does not advance *this.
  SeededRng split(std::uint64_t key) const;

  std::uint64_t next_u64();

  // Uniform on [0, 1).
  double next_double();
  // Uniform on the open interval (0, 1); safe under logarithms.
  double next_open();
  // Standard normal via Box-Muller (consumes two draws).
  double next_normal();
  // Uniform integer in [0, n), n >= 1.
  std::uint64_t next_below(std::uint64_t n);
  // Uniform on [lo, hi).
  double next_range(double lo, double hi);

  std::uint64_t seed() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace raydn
