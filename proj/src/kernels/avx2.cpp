// AVX2 + FMA variants of the likelihood sums. Compiled with -mavx2 -mfma and
// only ever called after the dispatcher has checked the CPU.
//
// The Mills ratio R(t) = (1 - Phi(t)) / phi(t) carries both tails:
//   x < 0, t = -x:  zeta0 = log 2 + log phi(t) + log R(t),  zeta1 = 1 / R(t)
//   x >= 0, t = x:  zeta0 = log 2 + log1p(-phi(t) R(t)),   zeta1 = phi / (1 - phi R)
// R comes from a panel Taylor table on [0, 5) and a continued fraction above.

#include <immintrin.h>

#include <cmath>

#include "skewpen/kernels.hpp"
#include "skewpen/specfun.hpp"

namespace skewpen::kernels::avx2 {

namespace {

#include "mills_table.inc"

constexpr int kCfDepth = 30;
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;

inline __m256d set1(double v) { return _mm256_set1_pd(v); }

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// exp(x) for x <= 709; flushes to zero below -708.
inline __m256d vexp(__m256d x) {
  const __m256d tiny = _mm256_cmp_pd(x, set1(-708.0), _CMP_LT_OQ);
  x = _mm256_max_pd(x, set1(-708.0));
  x = _mm256_min_pd(x, set1(709.0));
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, set1(1.4426950408889634074)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, set1(kLn2Hi), x);
  r = _mm256_fnmadd_pd(n, set1(kLn2Lo), r);
  // Taylor to degree 13; |r| <= ln2/2 keeps the remainder below 1e-17.
  static constexpr double inv_fact[14] = {
      1.0, 1.0, 1.0 / 2, 1.0 / 6, 1.0 / 24, 1.0 / 120, 1.0 / 720, 1.0 / 5040, 1.0 / 40320,
      1.0 / 362880, 1.0 / 3628800, 1.0 / 39916800, 1.0 / 479001600, 1.0 / 6227020800.0};
  __m256d p = set1(inv_fact[13]);
  for (int k = 12; k >= 0; --k) p = _mm256_fmadd_pd(p, r, set1(inv_fact[k]));
  const __m128i ni = _mm256_cvtpd_epi32(n);
  __m256i e = _mm256_cvtepi32_epi64(ni);
  e = _mm256_slli_epi64(_mm256_add_epi64(e, _mm256_set1_epi64x(1023)), 52);
  const __m256d y = _mm256_mul_pd(p, _mm256_castsi256_pd(e));
  return _mm256_andnot_pd(tiny, y);
}

// Natural log for positive normal x.
inline __m256d vlog(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
  // exponent as double via the 2^52 trick
  const __m256i ebits = _mm256_or_si256(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(0x4330000000000000LL));
  __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(ebits), set1(4503599627370496.0 + 1023.0));
  const __m256d big = _mm256_cmp_pd(m, set1(1.4142135623730950488), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, set1(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, set1(1.0)));
  const __m256d f = _mm256_sub_pd(m, set1(1.0));
  const __m256d s = _mm256_div_pd(f, _mm256_add_pd(f, set1(2.0)));
  const __m256d z = _mm256_mul_pd(s, s);
  // 2 atanh(s) = 2 (s + s^3/3 + ... + s^23/23)
  __m256d p = set1(1.0 / 23);
  for (int k = 21; k >= 3; k -= 2) p = _mm256_fmadd_pd(p, z, set1(1.0 / k));
  p = _mm256_mul_pd(p, z);
  const __m256d hf = _mm256_mul_pd(s, set1(2.0));
  const __m256d lg = _mm256_fmadd_pd(hf, p, hf);
  return _mm256_add_pd(_mm256_fmadd_pd(e, set1(kLn2Hi), lg), _mm256_mul_pd(e, set1(kLn2Lo)));
}

// R(t) for t >= 0.
inline __m256d vmills(__m256d t) {
  const __m256d scaled = _mm256_min_pd(_mm256_mul_pd(t, set1(1.0 / kMillsPanelWidth)),
                                       set1(kMillsPanels - 1.0));
  const __m256d fl = _mm256_floor_pd(scaled);
  const __m128i idx = _mm256_cvttpd_epi32(fl);
  const __m256d centre = _mm256_mul_pd(_mm256_add_pd(fl, set1(0.5)), set1(kMillsPanelWidth));
  const __m256d s = _mm256_sub_pd(t, centre);
  const __m128i row = _mm_mullo_epi32(idx, _mm_set1_epi32(kMillsDegree + 1));
  const double* base = &kMillsTable[0][0];
  __m256d r = _mm256_i32gather_pd(base + kMillsDegree, row, 8);
  for (int k = kMillsDegree - 1; k >= 0; --k) {
    r = _mm256_fmadd_pd(r, s, _mm256_i32gather_pd(base + k, row, 8));
  }
  const __m256d far = _mm256_cmp_pd(t, set1(kMillsPanels * kMillsPanelWidth), _CMP_GE_OQ);
  if (_mm256_movemask_pd(far) != 0) {
    __m256d v = _mm256_setzero_pd();
    for (int k = kCfDepth; k > 0; --k) v = _mm256_div_pd(set1(k), _mm256_add_pd(t, v));
    const __m256d cf = _mm256_div_pd(set1(1.0), _mm256_add_pd(t, v));
    r = _mm256_blendv_pd(r, cf, far);
  }
  return r;
}

struct Zeta {
  __m256d z0;
  __m256d z1;
};

template <bool kWant0, bool kWant1>
inline Zeta vzeta(__m256d x) {
  const __m256d sign = set1(-0.0);
  const __m256d t = _mm256_andnot_pd(sign, x);
  const __m256d neg = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_LT_OQ);
  const __m256d r = vmills(t);
  const __m256d half_t2 = _mm256_mul_pd(set1(0.5), _mm256_mul_pd(t, t));
  const __m256d logphi = _mm256_sub_pd(_mm256_setzero_pd(), _mm256_add_pd(half_t2, set1(kLogSqrt2Pi)));
  const __m256d phi = vexp(logphi);
  const __m256d q = _mm256_mul_pd(phi, r);
  const __m256d u = _mm256_sub_pd(set1(1.0), q);
  Zeta out{};
  if constexpr (kWant0) {
    const __m256d lg = vlog(_mm256_blendv_pd(u, r, neg));
    const __m256d left = _mm256_add_pd(_mm256_add_pd(set1(kLog2), logphi), lg);
    // log1p(-q) = log(u) - ((u - 1) + q) / u
    const __m256d corr = _mm256_div_pd(_mm256_add_pd(_mm256_sub_pd(u, set1(1.0)), q), u);
    const __m256d right = _mm256_add_pd(set1(kLog2), _mm256_sub_pd(lg, corr));
    out.z0 = _mm256_blendv_pd(right, left, neg);
  }
  if constexpr (kWant1) {
    const __m256d num = _mm256_blendv_pd(phi, set1(1.0), neg);
    const __m256d den = _mm256_blendv_pd(u, r, neg);
    out.z1 = _mm256_div_pd(num, den);
  }
  return out;
}

inline bool all_finite(__m256d x) {
  const __m256d ax = _mm256_andnot_pd(set1(-0.0), x);
  return _mm256_movemask_pd(_mm256_cmp_pd(ax, set1(INFINITY), _CMP_LT_OQ)) == 0xF;
}

// Applies `body(v, acc)` over x in blocks of four, padding the tail with `pad`.
template <class Body>
inline void for_blocks(const double* x, std::size_t n, double pad, Body&& body) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) body(_mm256_loadu_pd(x + i));
  if (i < n) {
    alignas(32) double buf[4] = {pad, pad, pad, pad};
    for (std::size_t k = 0; i + k < n; ++k) buf[k] = x[i + k];
    body(_mm256_load_pd(buf));
  }
}

}  // namespace

SnSums sn_sums(const double* y, std::size_t n, double xi, double inv_omega, double alpha) {
  __m256d acc_u2 = _mm256_setzero_pd();
  __m256d acc_z0 = _mm256_setzero_pd();
  const __m256d vxi = set1(xi), vinv = set1(inv_omega), va = set1(alpha);
  for_blocks(y, n, xi, [&](__m256d v) {
    const __m256d u = _mm256_mul_pd(_mm256_sub_pd(v, vxi), vinv);
    const __m256d x = _mm256_mul_pd(va, u);
    if (!all_finite(x)) {
      alignas(32) double tmp[4];
      _mm256_store_pd(tmp, x);
      for (double xv : tmp) (void)zeta0(xv);  // throws with the scalar diagnostic
    }
    acc_u2 = _mm256_fmadd_pd(u, u, acc_u2);
    acc_z0 = _mm256_add_pd(acc_z0, vzeta<true, false>(x).z0);
  });
  return {hsum(acc_u2), hsum(acc_z0)};
}

double sum_zeta0(const double* x, std::size_t n, double a) {
  __m256d acc = _mm256_setzero_pd();
  const __m256d va = set1(a);
  for_blocks(x, n, 0.0, [&](__m256d v) {
    const __m256d ax = _mm256_mul_pd(va, v);
    if (!all_finite(ax)) {
      alignas(32) double tmp[4];
      _mm256_store_pd(tmp, ax);
      for (double xv : tmp) (void)zeta0(xv);
    }
    acc = _mm256_add_pd(acc, vzeta<true, false>(ax).z0);
  });
  return hsum(acc);
}

double sum_x_zeta1(const double* x, std::size_t n, double a) {
  __m256d acc = _mm256_setzero_pd();
  const __m256d va = set1(a);
  for_blocks(x, n, 0.0, [&](__m256d v) {
    const __m256d ax = _mm256_mul_pd(va, v);
    if (!all_finite(ax)) {
      alignas(32) double tmp[4];
      _mm256_store_pd(tmp, ax);
      for (double xv : tmp) (void)zeta1(xv);
    }
    acc = _mm256_fmadd_pd(v, vzeta<false, true>(ax).z1, acc);
  });
  return hsum(acc);
}

double sum_x2_zeta1p(const double* x, std::size_t n, double a) {
  __m256d acc = _mm256_setzero_pd();
  const __m256d va = set1(a);
  for_blocks(x, n, 0.0, [&](__m256d v) {
    const __m256d ax = _mm256_mul_pd(va, v);
    if (!all_finite(ax)) {
      alignas(32) double tmp[4];
      _mm256_store_pd(tmp, ax);
      for (double xv : tmp) (void)zeta1(xv);
    }
    const __m256d z1 = vzeta<false, true>(ax).z1;
    const __m256d zp = _mm256_mul_pd(_mm256_sub_pd(_mm256_setzero_pd(), z1), _mm256_add_pd(ax, z1));
    acc = _mm256_fmadd_pd(_mm256_mul_pd(v, v), zp, acc);
  });
  return hsum(acc);
}

}  // namespace skewpen::kernels::avx2
