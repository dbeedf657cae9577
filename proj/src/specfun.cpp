#include "skewpen/specfun.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace skewpen {

namespace {

constexpr double kSqrt1_2 = 0.70710678118654752440;
constexpr double kLeftSwitch = -5.0;
constexpr int kMillsDepth = 30;

// log of the regularized incomplete beta I_z(a, b) by the continued fraction
// of the incomplete beta function (modified Lentz). Valid for
// z < (a + 1) / (a + b + 2); used only where I_z underflows in linear space.
double log_ibeta_cf(double a, double b, double z) {
  const double lbeta = boost::math::lgamma(a) + boost::math::lgamma(b) -
                       boost::math::lgamma(a + b);
  const double log_prefix = a * std::log(z) + b * std::log1p(-z) - std::log(a) - lbeta;

  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * z / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < 100000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * z / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * z / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return log_prefix + std::log(h);
}

// Lower tail T(-|x|; nu) = I_{nu/(nu+x^2)}(nu/2, 1/2) / 2, computed without
// cancellation for both small and large |x|.
double t_lower_tail(double abs_x, double nu) {
  const double x2 = abs_x * abs_x;
  if (x2 < nu) {
    const double w = x2 / (nu + x2);
    return 0.5 - 0.5 * boost::math::ibeta(0.5, 0.5 * nu, w);
  }
  const double z = nu / (nu + x2);
  return 0.5 * boost::math::ibeta(0.5 * nu, 0.5, z);
}

}  // namespace

namespace detail {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument(std::string(what) + ": argument must be finite");
  }
}

void require_positive_nu(double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    throw std::invalid_argument("degrees of freedom must be positive and finite, got " +
                                std::to_string(nu));
  }
}

double mills_ratio_cf(double t) {
  double v = 0.0;
  for (int k = kMillsDepth; k > 0; --k) v = k / (t + v);
  return 1.0 / (t + v);
}

}  // namespace detail

double norm_logpdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double mills_ratio(double t) {
  detail::require_finite(t, "mills_ratio");
  if (t >= 5.0) return detail::mills_ratio_cf(t);
  return 0.5 * std::erfc(t * kSqrt1_2) * std::exp(0.5 * t * t + kLogSqrt2Pi);
}

double zeta0(double x) {
  detail::require_finite(x, "zeta0");
  if (x >= 0.0) return kLog2 + std::log1p(-0.5 * std::erfc(x * kSqrt1_2));
  if (x >= kLeftSwitch) return std::log(std::erfc(-x * kSqrt1_2));
  return kLog2 + norm_logpdf(x) + std::log(detail::mills_ratio_cf(-x));
}

double zeta1(double x) {
  detail::require_finite(x, "zeta1");
  if (x >= kLeftSwitch) {
    return std::exp(norm_logpdf(x)) / (0.5 * std::erfc(-x * kSqrt1_2));
  }
  return 1.0 / detail::mills_ratio_cf(-x);
}

double zeta1_prime(double x) {
  const double z = zeta1(x);
  return -z * (x + z);
}

double t_logpdf(double x, double nu) {
  detail::require_positive_nu(nu);
  const double lognorm = boost::math::lgamma(0.5 * (nu + 1.0)) - boost::math::lgamma(0.5 * nu) -
                         0.5 * std::log(nu * M_PI);
  const double q = x * x / nu;
  const double log_kernel = std::isfinite(q) ? std::log1p(q)
                                             : 2.0 * std::log(std::fabs(x)) - std::log(nu);
  return lognorm - 0.5 * (nu + 1.0) * log_kernel;
}

double t_pdf(double x, double nu) { return std::exp(t_logpdf(x, nu)); }

double t_cdf(double x, double nu) {
  detail::require_positive_nu(nu);
  if (std::isnan(x)) throw std::invalid_argument("t_cdf: NaN argument");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  const double lower = t_lower_tail(std::fabs(x), nu);
  return x < 0.0 ? lower : 1.0 - lower;
}

double t_logcdf(double x, double nu) {
  detail::require_positive_nu(nu);
  detail::require_finite(x, "t_logcdf");
  const double lower = t_lower_tail(std::fabs(x), nu);
  if (x >= 0.0) return std::log1p(-lower);
  if (lower > 1e-280) return std::log(lower);
  const double z = nu / (nu + x * x);
  return std::log(0.5) + log_ibeta_cf(0.5 * nu, 0.5, z);
}

double zeta1_t(double x, double nu) {
  detail::require_finite(x, "zeta1_t");
  return std::exp(t_logpdf(x, nu) - t_logcdf(x, nu));
}

}  // namespace skewpen
