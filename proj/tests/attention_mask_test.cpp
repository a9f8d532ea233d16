// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "raydn/attention_mask.hpp"
#include "raydn/error.hpp"

using namespace raydn;

TEST_CASE("mask rules with two groups and two object queries") {
  // Layout: [g0 g0 | g1 g1 g1 | o o]
  const AttentionMask m = build_attention_mask(2, {2, 3});
  REQUIRE(m.n_total == 7);

  // Within-group attention allowed (including diagonal).
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) CHECK_FALSE(m.blocked(r, c));
  for (std::size_t r = 2; r < 5; ++r)
    for (std::size_t c = 2; c < 5; ++c) CHECK_FALSE(m.blocked(r, c));

  // Cross-group blocked both directions.
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 2; c < 5; ++c) {
      CHECK(m.blocked(r, c));
      CHECK(m.blocked(c, r));
    }

  // Ray -> object allowed; object -> ray blocked.
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 5; c < 7; ++c) CHECK_FALSE(m.blocked(r, c));
  for (std::size_t r = 5; r < 7; ++r)
    for (std::size_t c = 0; c < 5; ++c) CHECK(m.blocked(r, c));

  // Object -> object allowed.
  for (std::size_t r = 5; r < 7; ++r)
    for (std::size_t c = 5; c < 7; ++c) CHECK_FALSE(m.blocked(r, c));
}

TEST_CASE("no groups means nothing is blocked") {
  const AttentionMask m = build_attention_mask(3, {});
  REQUIRE(m.n_total == 3);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) CHECK_FALSE(m.blocked(r, c));
}

TEST_CASE("dump renders a golden grid") {
  const AttentionMask m = build_attention_mask(1, {1, 1});
  CHECK(dump_mask(m) ==
        "010\n"
        "100\n"
        "110\n");
}

TEST_CASE("empty groups are rejected") {
  CHECK_THROWS_AS(build_attention_mask(2, {2, 0}), DomainError);
}
