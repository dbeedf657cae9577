#include "skewpen/kernels.hpp"
#include "skewpen/specfun.hpp"

namespace skewpen::kernels::scalar {

SnSums sn_sums(const double* y, std::size_t n, double xi, double inv_omega, double alpha) {
  SnSums s;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (y[i] - xi) * inv_omega;
    s.sum_u2 += u * u;
    s.sum_zeta0 += zeta0(alpha * u);
  }
  return s;
}

double sum_zeta0(const double* x, std::size_t n, double a) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += zeta0(a * x[i]);
  return s;
}

double sum_x_zeta1(const double* x, std::size_t n, double a) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * zeta1(a * x[i]);
  return s;
}

double sum_x2_zeta1p(const double* x, std::size_t n, double a) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i] * zeta1_prime(a * x[i]);
  return s;
}

}  // namespace skewpen::kernels::scalar
