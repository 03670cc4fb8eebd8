#pragma once

// Independent reference implementations used as oracles by the tests.
// These deliberately take different computational routes than the library.

#include <cmath>
#include <vector>

namespace oracle {

// erfc for z > 0 via the Legendre continued fraction
//   erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
// evaluated backward at fixed depth in long double.
inline long double erfc_cf(long double z) {
  long double cf = 0.0L;
  for (int n = 200; n >= 1; --n) {
    cf = (n / 2.0L) / (z + cf);
  }
  cf = 1.0L / (z + cf);
  return std::exp(-z * z) / std::sqrt(static_cast<long double>(M_PI)) * cf;
}

// log erfc(z) for z > 0, exp(-z^2) factored out so deep tails stay finite.
inline long double log_erfc_cf(long double z) {
  long double cf = 0.0L;
  for (int n = 200; n >= 1; --n) {
    cf = (n / 2.0L) / (z + cf);
  }
  cf = 1.0L / (z + cf);
  return -z * z - 0.5L * std::log(static_cast<long double>(M_PI)) + std::log(cf);
}

// erf via Taylor series (long double); accurate for |z| <~ 2.5.
inline long double erf_series(long double z) {
  long double term = z, sum = z;
  for (int n = 1; n < 120; ++n) {
    term *= -z * z / n;
    sum += term / (2 * n + 1);
  }
  return 2.0L / std::sqrt(static_cast<long double>(M_PI)) * sum;
}

// standard normal cdf oracle, series in the bulk and continued fraction in
// the tails
inline long double std_normal_cdf_ref(long double x) {
  const long double z = std::fabs(x) / std::sqrt(2.0L);
  long double tail;  // Phi(-|x|)
  if (z < 2.0L) {
    tail = 0.5L * (1.0L - erf_series(z));
  } else {
    tail = 0.5L * erfc_cf(z);
  }
  return x <= 0 ? tail : 1.0L - tail;
}

inline long double log_std_normal_cdf_ref(long double x) {
  if (x > -2.0L) return std::log(std_normal_cdf_ref(x));
  return std::log(0.5L) + log_erfc_cf(-x / std::sqrt(2.0L));
}

// Gaussian moment: integral of s^j exp(-s^2) ds over R.
inline long double gaussian_moment(int j) {
  if (j % 2 == 1) return 0.0L;
  long double m = std::sqrt(static_cast<long double>(M_PI));  // j = 0
  for (int k = 2; k <= j; k += 2) m *= (k - 1) / 2.0L;
  return m;
}

// integral of |s|^j exp(-s^2) ds, for error scales
inline long double gaussian_abs_moment(int j) {
  if (j % 2 == 0) return gaussian_moment(j);
  long double m = 1.0L;  // j = 1
  for (int k = 3; k <= j; k += 2) m *= (k - 1) / 2.0L;
  return m;
}

}  // namespace oracle
