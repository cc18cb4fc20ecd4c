#pragma once

namespace certdp {

// Regularized lower incomplete gamma function P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);

// CDF of the chi-squared distribution with k degrees of freedom.
double chi_squared_cdf(double x, double k);

// Inverse of chi_squared_cdf for p in (0, 1).
double chi_squared_quantile(double p, double k);

}  // namespace certdp
