#pragma once

// Univariate standard normal kernels: density, CDF, quantile.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfpca {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;

inline double std_normal_pdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

inline double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

// Upper tail P(Z > x), accurate for large positive x.
inline double std_normal_sf(double x) {
  return 0.5 * std::erfc(x * kInvSqrt2);
}

namespace detail {

// Acklam's rational approximation, |rel err| < 1.2e-9 before refinement.
inline double norm_quantile_approx(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double q = std::sqrt(-2.0 * std::log1p(-p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace detail

// Inverse of std_normal_cdf. p in [0,1]; endpoints map to -/+inf.
inline double std_normal_quantile(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0)
    throw std::invalid_argument("std_normal_quantile: p must lie in [0,1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  double x = detail::norm_quantile_approx(p);
  // One Halley step against the erfc-based CDF brings the result to ~1e-15.
  const double e = std_normal_cdf(x) - p;
  const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace mfpca
