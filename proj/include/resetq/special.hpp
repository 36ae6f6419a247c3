#pragma once

#include <cstddef>

namespace resetq {

// Standard-normal CDF and its inverse.
double norm_cdf(double z);
// log Phi(z), safe for very negative z (used by the inverse-Gaussian CDF
// whose second term is exp(huge) * Phi(very negative)).
double log_norm_cdf(double z);
double norm_quantile(double p);

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Regularized incomplete beta I_x(a,b) (continued fraction).
double regularized_beta(double a, double b, double x);

// Upper tail of the chi-square distribution with df degrees of freedom.
double chi_square_sf(double x, double df);

// Student-t two-sided critical value: t with P(|T_nu| <= t) = level.
double student_t_critical(double level, double nu);

// One-sample Kolmogorov-Smirnov critical value at significance alpha
// (asymptotic): sqrt(-ln(alpha/2) / (2n)).
double ks_critical(std::size_t n, double alpha);

}  // namespace resetq
