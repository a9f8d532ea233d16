// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <doctest.h>

#include "raydn/error.hpp"
#include "raydn/hungarian.hpp"
#include "raydn/rng.hpp"

using namespace raydn;

namespace {

// Exhaustive oracle: try every injective placement of gts into queries.
// Returns (min cost, lexicographically smallest optimal pair list).
std::pair<double, std::vector<std::pair<std::size_t, std::size_t>>> brute_force(
    const CostMatrix& cm) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::size_t, std::size_t>> best_pairs;
  // Permute query indices; the first n_gt positions host gt 0..n_gt-1.
  std::vector<std::size_t> sel(cm.n_gt);
  std::vector<bool> used(cm.n_query, false);
  std::function<void(std::size_t, double)> rec = [&](std::size_t g, double acc) {
    if (g == cm.n_gt) {
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      for (std::size_t i = 0; i < cm.n_gt; ++i) pairs.emplace_back(sel[i], i);
      std::sort(pairs.begin(), pairs.end());
      if (acc < best - 1e-12 ||
          (std::abs(acc - best) <= 1e-12 && pairs < best_pairs)) {
        best = std::min(best, acc);
        best_pairs = pairs;
      }
      return;
    }
    for (std::size_t q = 0; q < cm.n_query; ++q) {
      if (used[q]) continue;
      used[q] = true;
      sel[g] = q;
      rec(g + 1, acc + cm.at(q, g));
      used[q] = false;
    }
  };
  rec(0, 0.0);
  return {best, best_pairs};
}

}  // namespace

TEST_CASE("total cost equals the brute-force minimum on random matrices") {
  SeededRng rng(81);
  for (int t = 0; t < 1000; ++t) {
    CostMatrix cm;
    cm.n_query = 1 + rng.next_below(6);
    cm.n_gt = 1 + rng.next_below(cm.n_query);
    cm.cost.resize(cm.n_query * cm.n_gt);
    for (double& c : cm.cost) c = rng.next_range(-4.0, 4.0);
    const MatchResult got = hungarian_match(cm);
    const auto [want, want_pairs] = brute_force(cm);
    REQUIRE(got.pairs.size() == cm.n_gt);
    CHECK(got.total_cost == doctest::Approx(want).epsilon(1e-9));
    // Verify the reported pairs actually sum to the reported cost.
    double sum = 0.0;
    for (const auto& [q, g] : got.pairs) sum += cm.at(q, g);
    CHECK(sum == doctest::Approx(got.total_cost).epsilon(1e-12));
  }
}

TEST_CASE("ties resolve to the lexicographically smallest assignment") {
  CostMatrix cm;
  cm.n_query = 2;
  cm.n_gt = 2;
  cm.cost = {1.0, 1.0, 1.0, 1.0};
  const MatchResult r = hungarian_match(cm);
  REQUIRE(r.pairs.size() == 2);
  CHECK(r.pairs[0] == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(r.pairs[1] == std::pair<std::size_t, std::size_t>{1, 1});
  CHECK(r.total_cost == doctest::Approx(2.0));
}

TEST_CASE("lexicographic refinement matches the brute-force tie-break") {
  SeededRng rng(82);
  for (int t = 0; t < 400; ++t) {
    CostMatrix cm;
    cm.n_query = 2 + rng.next_below(4);
    cm.n_gt = 1 + rng.next_below(cm.n_query);
    cm.cost.resize(cm.n_query * cm.n_gt);
    // Quantized costs produce frequent exact ties.
    for (double& c : cm.cost) c = static_cast<double>(rng.next_below(3));
    const MatchResult got = hungarian_match(cm);
    const auto [want, want_pairs] = brute_force(cm);
    CHECK(got.total_cost == doctest::Approx(want).epsilon(1e-9));
    REQUIRE(got.pairs.size() == want_pairs.size());
    for (std::size_t i = 0; i < want_pairs.size(); ++i) {
      CHECK(got.pairs[i].first == want_pairs[i].first);
      CHECK(got.pairs[i].second == want_pairs[i].second);
    }
  }
}

TEST_CASE("rectangular matrices leave extra queries unmatched") {
  CostMatrix cm;
  cm.n_query = 4;
  cm.n_gt = 2;
  // gt0 cheap at q2, gt1 cheap at q0.
  cm.cost = {5, 0.5, 9, 9, 0.25, 7, 8, 8};
  const MatchResult r = hungarian_match(cm);
  REQUIRE(r.pairs.size() == 2);
  CHECK(r.pairs[0] == std::pair<std::size_t, std::size_t>{0, 1});
  CHECK(r.pairs[1] == std::pair<std::size_t, std::size_t>{2, 0});
  CHECK(r.total_cost == doctest::Approx(0.75));
}

TEST_CASE("capacity and domain errors") {
  CostMatrix cm;
  cm.n_query = 1;
  cm.n_gt = 2;
  cm.cost = {1.0, 2.0};
  CHECK_THROWS_AS(hungarian_match(cm), CapacityError);

  CostMatrix nan_cm;
  nan_cm.n_query = 2;
  nan_cm.n_gt = 1;
  nan_cm.cost = {std::numeric_limits<double>::quiet_NaN(), 1.0};
  CHECK_THROWS_AS(hungarian_match(nan_cm), DomainError);
}
