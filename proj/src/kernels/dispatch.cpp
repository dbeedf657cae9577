#include <atomic>
#include <stdexcept>
#include <string>

#include "skewpen/kernels.hpp"

namespace skewpen::kernels {

namespace {

Isa detect() {
  if (isa_supported(Isa::avx2)) return Isa::avx2;
  return Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(SKEWPEN_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument(std::string("instruction set not available: ") + isa_name(isa));
  }
  current().store(isa, std::memory_order_relaxed);
}

#if defined(SKEWPEN_HAVE_AVX2)
#define SKEWPEN_DISPATCH(fn, ...) \
  (active_isa() == Isa::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define SKEWPEN_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

SnSums sn_sums(const double* y, std::size_t n, double xi, double inv_omega, double alpha) {
  return SKEWPEN_DISPATCH(sn_sums, y, n, xi, inv_omega, alpha);
}

double sum_zeta0(const double* x, std::size_t n, double a) { return SKEWPEN_DISPATCH(sum_zeta0, x, n, a); }

double sum_x_zeta1(const double* x, std::size_t n, double a) {
  return SKEWPEN_DISPATCH(sum_x_zeta1, x, n, a);
}

double sum_x2_zeta1p(const double* x, std::size_t n, double a) {
  return SKEWPEN_DISPATCH(sum_x2_zeta1p, x, n, a);
}

}  // namespace skewpen::kernels
