// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "raydn/rng.hpp"
#include "raydn/special_functions.hpp"

namespace raydn {

// Single Gamma(shape, 1) variate. Marsaglia-Tsang squeeze rejection for
// shape >= 1; shapes below 1 are boosted via x = y * u^(1/shape).
double sample_gamma(SeededRng& rng, double shape);

// Single Beta(lambda, mu) variate as a ratio of two Gamma draws; always in
// the open interval (0, 1).
double sample_beta_one(SeededRng& rng, const BetaParams& p);

// n i.i.d. Beta(lambda, mu) variates.
std::vector<double> sample_beta(SeededRng& rng, const BetaParams& p, std::size_t n);

// n offsets y = 2x - 1 in (-1, 1), x ~ Beta(lambda, mu).
std::vector<double> sample_offsets(SeededRng& rng, const BetaParams& p, std::size_t n);

}  // namespace raydn
