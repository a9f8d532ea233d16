// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace raydn {

// Shape parameters of a Beta distribution; both strictly positive and finite.
struct BetaParams {
  double lambda = 1.0;
  double mu = 1.0;
};

// Throws DomainError unless both parameters are finite and > 0.
void validate(const BetaParams& p);

// ln(Gamma(x)) for x > 0 via a fixed-coefficient Lanczos approximation.
// Absolute error < 1e-10 on [0.1, 170].
double log_gamma(double x);

// Beta density Gamma(l+m)/(Gamma(l)*Gamma(m)) * x^(l-1) * (1-x)^(m-1),
// evaluated in log space. Requires 0 < x < 1.
double beta_pdf(double x, const BetaParams& p);

// Regularized incomplete beta I_x(lambda, mu) by continued fraction (Lentz).
// Requires 0 <= x <= 1; absolute error < 1e-9.
double beta_cdf(double x, const BetaParams& p);

}  // namespace raydn
