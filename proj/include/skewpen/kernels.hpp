#pragma once

// Data-parallel likelihood sums. Each entry point has a scalar reference
// implementation built on specfun and an AVX2 variant; the variant is picked
// once at startup from the CPU feature bits and can be overridden.

#include <cstddef>

namespace skewpen::kernels {

enum class Isa { scalar, avx2 };

struct SnSums {
  double sum_u2 = 0.0;     // sum of u_i^2
  double sum_zeta0 = 0.0;  // sum of zeta0(alpha u_i)
};

/// True when the CPU can run `isa` and it was compiled in.
bool isa_supported(Isa isa);
const char* isa_name(Isa isa);

/// ISA used by the dispatching entry points below.
Isa active_isa();

/// Override the dispatch choice; throws std::invalid_argument if unsupported.
/// Not thread-safe against concurrent kernel calls; intended for startup and tests.
void force_isa(Isa isa);

/// u_i = (y_i - xi) * inv_omega; returns sums of u^2 and zeta0(alpha u).
SnSums sn_sums(const double* y, std::size_t n, double xi, double inv_omega, double alpha);

/// sum_i zeta0(a x_i)
double sum_zeta0(const double* x, std::size_t n, double a);

/// sum_i x_i zeta1(a x_i)
double sum_x_zeta1(const double* x, std::size_t n, double a);

/// sum_i x_i^2 zeta1'(a x_i)
double sum_x2_zeta1p(const double* x, std::size_t n, double a);

namespace scalar {
SnSums sn_sums(const double* y, std::size_t n, double xi, double inv_omega, double alpha);
double sum_zeta0(const double* x, std::size_t n, double a);
double sum_x_zeta1(const double* x, std::size_t n, double a);
double sum_x2_zeta1p(const double* x, std::size_t n, double a);
}  // namespace scalar

namespace avx2 {
SnSums sn_sums(const double* y, std::size_t n, double xi, double inv_omega, double alpha);
double sum_zeta0(const double* x, std::size_t n, double a);
double sum_x_zeta1(const double* x, std::size_t n, double a);
double sum_x2_zeta1p(const double* x, std::size_t n, double a);
}  // namespace avx2

}  // namespace skewpen::kernels
