#pragma once

// Scalar special functions for the skew-normal and skew-t families.
//
// All functions are pure and reentrant. Left-tail evaluations go through the
// Mills ratio so that log Phi and phi/Phi stay finite far below the point
// where Phi itself underflows.

namespace skewpen {

inline constexpr double kLog2 = 0.69314718055994530942;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kSqrt2OverPi = 0.79788456080286535588;
inline constexpr double kEulerGamma = 0.57721566490153286061;

/// Standard normal log-density.
double norm_logpdf(double x);

/// Mills ratio R(t) = (1 - Phi(t)) / phi(t).
double mills_ratio(double t);

/// zeta0(x) = log(2 Phi(x)). Finite for every finite x; throws on NaN/inf.
double zeta0(double x);

/// zeta1(x) = phi(x) / Phi(x), the inverse Mills ratio (derivative of zeta0).
double zeta1(double x);

/// Derivative of zeta1: -zeta1(x) (x + zeta1(x)).
double zeta1_prime(double x);

/// Student t density, log-density, distribution function and its log, for
/// real nu > 0. The log-CDF stays finite in the deep left tail.
double t_logpdf(double x, double nu);
double t_pdf(double x, double nu);
double t_cdf(double x, double nu);
double t_logcdf(double x, double nu);

/// zeta1(x; nu) = t(x; nu) / T(x; nu).
double zeta1_t(double x, double nu);

namespace detail {
/// Mills ratio by backward continued fraction; accurate for t >= 5.
double mills_ratio_cf(double t);
void require_finite(double x, const char* what);
void require_positive_nu(double nu);
}  // namespace detail

}  // namespace skewpen
