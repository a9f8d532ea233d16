// SPDX-License-Identifier: Apache-2.0
#include "raydn/beta_sampler.hpp"

#include <cmath>

#include "raydn/error.hpp"

namespace raydn {

double sample_gamma(SeededRng& rng, double shape) {
  if (!(shape > 0.0)) throw DomainError("gamma shape must be > 0");
  if (shape < 1.0) {
    const double boost = std::pow(rng.next_open(), 1.0 / shape);
    return sample_gamma(rng, shape + 1.0) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = rng.next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_beta_one(SeededRng& rng, const BetaParams& p) {
  validate(p);
  const double a = sample_gamma(rng, p.lambda);
  const double b = sample_gamma(rng, p.mu);
  double x = a / (a + b);
  // Keep the contract interval open even under extreme underflow.
  if (x <= 0.0) x = 1e-300;
  if (x >= 1.0) x = 1.0 - 1e-16;
  return x;
}

std::vector<double> sample_beta(SeededRng& rng, const BetaParams& p, std::size_t n) {
  if (n < 1) throw DomainError("sample_beta requires n >= 1");
  std::vector<double> out(n);
  for (auto& v : out) v = sample_beta_one(rng, p);
  return out;
}

std::vector<double> sample_offsets(SeededRng& rng, const BetaParams& p, std::size_t n) {
  auto out = sample_beta(rng, p, n);
  for (auto& v : out) v = 2.0 * v - 1.0;
  return out;
}

}  // namespace raydn
