#pragma once

namespace fsmc {

// Standard normal density.
double std_normal_pdf(double x);

// Standard normal cdf, erfc based; total on finite inputs.
double std_normal_cdf(double x);

// log of the standard normal cdf.  Uses an asymptotic tail expansion for
// x < -10 so the value stays finite far into the left tail, where
// 0.5*erfc(-x/sqrt(2)) underflows.
double log_std_normal_cdf(double x);

// Inverse cdf by bisection on std_normal_cdf; p in (0, 1).
double inverse_std_normal_cdf(double p);

}  // namespace fsmc
