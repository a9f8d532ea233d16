// SPDX-License-Identifier: Apache-2.0
#include "raydn/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "raydn/error.hpp"

namespace raydn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest-augmenting-path assignment on a square matrix with potentials
// (Jonker-Volgenant flavor, 1-based sentinel formulation). Entries may be
// +inf (forbidden). Returns the minimal total cost, or +inf if no perfect
// matching avoids forbidden entries.
double solve_square(const std::vector<double>& a, std::size_t n,
                    std::vector<int>* row_to_col) {
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = static_cast<int>(i);
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = kInf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur =
            a[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] -
            u[static_cast<std::size_t>(i0)] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = static_cast<int>(j);
        }
      }
      if (j1 < 0 || delta == kInf) return kInf;  // blocked by forbidden entries
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[static_cast<std::size_t>(p[j])] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  if (row_to_col) row_to_col->assign(n, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = static_cast<std::size_t>(p[j]);
    if (row_to_col) (*row_to_col)[i - 1] = static_cast<int>(j - 1);
    total += a[(i - 1) * n + (j - 1)];
  }
  return total;
}

// Pads queries x gts to a square matrix: columns beyond n_gt are dummies with
// constant zero cost, which every query can absorb without changing the
// optimum over real columns.
std::vector<double> padded(const CostMatrix& c) {
  const std::size_t n = c.n_query;
  std::vector<double> a(n * n, 0.0);
  for (std::size_t q = 0; q < n; ++q)
    for (std::size_t g = 0; g < c.n_gt; ++g) a[q * n + g] = c.at(q, g);
  return a;
}

// Minimal cost with some (query, gt) pairs pre-forced and optionally one
// query forbidden from all real gts. Implemented by editing the padded
// matrix: a forced pair keeps only its own column finite in that row and
// blocks the column for all other rows.
double constrained_optimum(const CostMatrix& c,
                           const std::vector<int>& forced_gt_of_query) {
  const std::size_t n = c.n_query;
  std::vector<double> a = padded(c);
  for (std::size_t q = 0; q < n; ++q) {
    const int fg = forced_gt_of_query[q];
    if (fg < 0) continue;
    for (std::size_t j = 0; j < n; ++j)
      if (j != static_cast<std::size_t>(fg)) a[q * n + j] = kInf;
    for (std::size_t r = 0; r < n; ++r)
      if (r != q) a[r * n + static_cast<std::size_t>(fg)] = kInf;
  }
  return solve_square(a, n, nullptr);
}

}  // namespace

MatchResult hungarian_match(const CostMatrix& c) {
  if (c.n_gt > c.n_query)
    throw CapacityError("hungarian_match: more gts than queries");
  for (double x : c.cost)
    if (!std::isfinite(x)) throw DomainError("hungarian_match: non-finite cost");

  MatchResult result;
  if (c.n_gt == 0) return result;

  const std::size_t n = c.n_query;
  std::vector<double> a = padded(c);
  const double best = solve_square(a, n, nullptr);
  double scale = std::max(1.0, std::abs(best));
  const double tol = 1e-9 * scale;

  // Lexicographic refinement: fix pairs greedily, verifying after each fix
  // that an optimal completion still exists.
  std::vector<int> forced(n, -1);
  std::vector<char> gt_taken(c.n_gt, 0);
  std::size_t n_fixed = 0;
  for (std::size_t q = 0; q < n && n_fixed < c.n_gt; ++q) {
    for (std::size_t g = 0; g < c.n_gt; ++g) {
      if (gt_taken[g]) continue;
      forced[q] = static_cast<int>(g);
      const double with_fix = constrained_optimum(c, forced);
      if (with_fix <= best + tol) {
        gt_taken[g] = 1;
        ++n_fixed;
        break;
      }
      forced[q] = -1;
    }
  }
  if (n_fixed != c.n_gt)
    throw NumericError("hungarian_match: refinement failed to place all gts");

  for (std::size_t q = 0; q < n; ++q) {
    if (forced[q] < 0) continue;
    const std::size_t g = static_cast<std::size_t>(forced[q]);
    result.pairs.emplace_back(q, g);
    result.total_cost += c.at(q, g);
  }
  return result;
}

}  // namespace raydn
