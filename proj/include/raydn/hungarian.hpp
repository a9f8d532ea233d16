// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace raydn {

// Cost of assigning query row q to ground-truth column g. n_gt <= n_query;
// unmatched queries are background.
struct CostMatrix {
  std::size_t n_query = 0;
  std::size_t n_gt = 0;
  std::vector<double> cost;  // row-major n_query * n_gt

  double at(std::size_t q, std::size_t g) const { return cost[q * n_gt + g]; }
};

struct MatchResult {
  // pairs[i] = (query_index, gt_index), sorted by query_index ascending.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total_cost = 0.0;
};

// Minimum-cost injection of gts into queries (every gt matched exactly once).
// Among cost-minimal assignments returns the lexicographically smallest pair
// sequence: queries considered in ascending order, each taking the smallest
// gt index that still permits an optimal completion. Throws CapacityError
// when n_gt > n_query and DomainError on non-finite costs.
MatchResult hungarian_match(const CostMatrix& cost);

}  // namespace raydn
