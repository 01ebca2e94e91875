#pragma once

#include <cmath>
#include <numbers>

namespace sdp {

// Error function and standard normal helpers.  Backed by the C library's
// erf/erfc (SPECFUN-style rational approximations, < 1 ulp); the normal CDF
// goes through erfc so the deep lower tail keeps relative accuracy.

inline double erf(double x) { return std::erf(x); }

inline double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace sdp
