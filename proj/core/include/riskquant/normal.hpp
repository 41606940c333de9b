#pragma once

namespace riskquant {

/// Standard normal density phi(x).
double norm_pdf(double x);

/// Standard normal CDF Phi(x), computed from erfc.
double norm_cdf(double x);

/// Inverse standard normal CDF. Rational approximation refined by Halley
/// steps on the erfc-based CDF; absolute error well below 1e-12.
/// Throws DomainError unless 0 < p < 1.
double norm_quantile(double p);

/// Reference inverse CDF: plain bisection on norm_cdf to 1e-12 interval
/// width. Slow; exists to validate norm_quantile.
double norm_quantile_bisect(double p);

/// E[(Y - q)^+] for Y ~ N(mu, sigma^2): sigma*(phi(u) - u*(1 - Phi(u)))
/// with u = (q - mu)/sigma. For sigma == 0 returns (mu - q)^+.
double gaussian_positive_part_mean(double mu, double sigma, double q);

}  // namespace riskquant
