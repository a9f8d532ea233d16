// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include <doctest.h>

#include "raydn/rng.hpp"

using raydn::SeededRng;

TEST_CASE("identical seeds give identical streams") {
  SeededRng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge immediately") {
  SeededRng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
  CHECK(same == 0);
}

TEST_CASE("substreams are mutually independent and reproducible") {
  SeededRng s0 = SeededRng::substream(7, 0);
  SeededRng s1 = SeededRng::substream(7, 1);
  SeededRng s0_again = SeededRng::substream(7, 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 256; ++i) {
    const auto x = s0.next_u64();
    CHECK(x == s0_again.next_u64());
    seen.insert(x);
    seen.insert(s1.next_u64());
  }
  CHECK(seen.size() == 512);  // no collisions between the two streams
}

TEST_CASE("split derives a new stream without advancing the parent") {
  SeededRng parent(99);
  const auto c0 = parent.counter();
  SeededRng child = parent.split(3);
  CHECK(parent.counter() == c0);
  SeededRng child_again = parent.split(3);
  for (int i = 0; i < 64; ++i) CHECK(child.next_u64() == child_again.next_u64());
  SeededRng other = parent.split(4);
  CHECK(other.next_u64() != SeededRng(parent.split(3).seed()).next_u64());
}

TEST_CASE("next_double uniform moments") {
  SeededRng rng(5);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.next_double();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 0.005);
  CHECK(std::abs(var - 1.0 / 12.0) < 0.005);
}

TEST_CASE("next_open stays strictly inside (0,1)") {
  SeededRng rng(6);
  for (int i = 0; i < 100000; ++i) {
    const double x = rng.next_open();
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("next_normal moments") {
  SeededRng rng(8);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.next_normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(sumsq / n - mean * mean - 1.0) < 0.02);
}

TEST_CASE("next_below respects bounds and hits every residue") {
  SeededRng rng(11);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto x = rng.next_below(7);
    CHECK(x < 7);
    seen.insert(x);
  }
  CHECK(seen.size() == 7);
  CHECK(rng.next_below(1) == 0);
}

TEST_CASE("next_range bounds") {
  SeededRng rng(12);
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.next_range(-3.0, 2.0);
    CHECK(x >= -3.0);
    CHECK(x < 2.0);
  }
}
