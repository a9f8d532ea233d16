// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "raydn/beta_sampler.hpp"
#include "raydn/error.hpp"
#include "raydn/special_functions.hpp"

using namespace raydn;

namespace {

// One-sample Kolmogorov-Smirnov statistic against the analytic CDF.
double ks_statistic(std::vector<double> draws, const BetaParams& p) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double c = beta_cdf(draws[i], p);
    worst = std::max(worst, std::abs(c - static_cast<double>(i) / n));
    worst = std::max(worst, std::abs(static_cast<double>(i + 1) / n - c));
  }
  return worst;
}

// Inverse-CDF sampler by bisection: slow, independent oracle for moments.
double inverse_cdf(double u, const BetaParams& p) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (beta_cdf(mid, p) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("gamma sampler basic law checks") {
  SeededRng rng(31);
  for (double shape : {0.5, 1.0, 2.5, 8.0}) {
    double sum = 0.0, sumsq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double x = sample_gamma(rng, shape);
      CHECK(x > 0.0);
      sum += x;
      sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(mean == doctest::Approx(shape).epsilon(0.02));        // E = k
    CHECK(var == doctest::Approx(shape).epsilon(0.05));         // Var = k
  }
  CHECK_THROWS_AS(sample_gamma(rng, 0.0), DomainError);
  CHECK_THROWS_AS(sample_gamma(rng, -1.0), DomainError);
}

TEST_CASE("beta sampler passes KS against the analytic CDF on the study grid") {
  const BetaParams grid[] = {{1, 1}, {2, 8}, {5, 5}, {8, 2}, {7, 3}};
  for (const auto& p : grid) {
    SeededRng rng(37);
    auto draws = sample_beta(rng, p, 100000);
    for (double x : draws) {
      CHECK(x > 0.0);
      CHECK(x < 1.0);
    }
    CHECK(ks_statistic(std::move(draws), p) < 0.01);
  }
}

TEST_CASE("beta sampler handles shapes below one") {
  const BetaParams p{0.5, 0.5};
  SeededRng rng(38);
  auto draws = sample_beta(rng, p, 50000);
  CHECK(ks_statistic(std::move(draws), p) < 0.015);
}

TEST_CASE("sampler mean matches the inverse-CDF oracle") {
  const BetaParams p{7.0, 3.0};
  SeededRng rng(39);
  const int n = 100000;
  double mc = 0.0;
  for (int i = 0; i < n; ++i) mc += sample_beta_one(rng, p);
  mc /= n;
  double oracle = 0.0;
  for (int i = 0; i < 2000; ++i) oracle += inverse_cdf((i + 0.5) / 2000.0, p);
  oracle /= 2000.0;
  CHECK(mc == doctest::Approx(oracle).epsilon(0.01));
  CHECK(oracle == doctest::Approx(0.7).epsilon(0.01));  // analytic l/(l+m)
}

TEST_CASE("offsets live in (-1,1) with mean 2l/(l+m) - 1") {
  const BetaParams grid[] = {{1, 1}, {2, 8}, {5, 5}, {8, 2}, {7, 3}};
  for (const auto& p : grid) {
    SeededRng rng(41);
    const auto ys = sample_offsets(rng, p, 100000);
    double mean = 0.0;
    for (double y : ys) {
      CHECK(y > -1.0);
      CHECK(y < 1.0);
      mean += y;
    }
    mean /= static_cast<double>(ys.size());
    const double want = 2.0 * p.lambda / (p.lambda + p.mu) - 1.0;
    CHECK(std::abs(mean - want) < 0.01);
  }
}

TEST_CASE("sampling is deterministic per seed") {
  SeededRng a(55), b(55);
  const auto xs = sample_beta(a, {8, 2}, 64);
  const auto ys = sample_beta(b, {8, 2}, 64);
  CHECK(xs == ys);
  CHECK_THROWS_AS(sample_beta(a, {8, 2}, 0), DomainError);
}
