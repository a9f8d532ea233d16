// SPDX-License-Identifier: Apache-2.0
#include "raydn/rng.hpp"

#include <cmath>

#include "raydn/error.hpp"

namespace raydn {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 output finalizer (Steele, Lea, Flood 2014).
std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

SeededRng SeededRng::substream(std::uint64_t seed, std::uint64_t stream_index) {
  // Two finalizer rounds decorrelate (seed, index) pairs that differ in one bit.
  return SeededRng(mix(seed + kGolden * mix(stream_index + kGolden)));
}

SeededRng SeededRng::split(std::uint64_t key) const {
  return substream(key_, key);
}

std::uint64_t SeededRng::next_u64() {
  counter_ += 1;
  return mix(key_ + counter_ * kGolden);
}

double SeededRng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::next_open() {
  return static_cast<double>(next_u64() >> 12) * 0x1.0p-52 + 0x1.0p-53;
}

double SeededRng::next_normal() {
  const double u1 = next_open();
  const double u2 = next_open();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

std::uint64_t SeededRng::next_below(std::uint64_t n) {
  if (n == 0) throw DomainError("next_below requires n >= 1");
  // Fixed-point multiply; bias is O(n / 2^64), negligible for our ranges.
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double SeededRng::next_range(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

}  // namespace raydn
