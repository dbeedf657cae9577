#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "skewpen/kernels.hpp"
#include "skewpen/specfun.hpp"

using namespace skewpen;
namespace k = skewpen::kernels;

namespace {

std::vector<double> mixed_points(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  // deliberately visit the panel edges and both tails
  for (double v : {0.0, -0.0, 4.999999, 5.0, -5.0, -5.000001, 0.125, -0.125, 38.0, -38.0, 60.0, -60.0, 1e-300})
    x.push_back(v);
  return x;
}

// Tolerance scale: sum of |terms| with a unit floor per element, since
// log 2 + log(1/2) style cancellation leaves ~1e-16 absolute error at 0.
struct Abs {
  double zeta0 = 0, xz1 = 0, x2z1p = 0;
};

Abs abs_sums(const std::vector<double>& x, double a) {
  Abs s;
  for (double v : x) {
    s.zeta0 += std::max(1.0, std::fabs(zeta0(a * v)));
    s.xz1 += std::fabs(v * zeta1(a * v));
    s.x2z1p += std::fabs(v * v * zeta1_prime(a * v));
  }
  return s;
}

}  // namespace

TEST_CASE("dispatch reports a usable instruction set") {
  CHECK(k::isa_supported(k::Isa::scalar));
  CHECK(k::isa_supported(k::active_isa()));
  const auto saved = k::active_isa();
  k::force_isa(k::Isa::scalar);
  CHECK(k::active_isa() == k::Isa::scalar);
  k::force_isa(saved);
}

TEST_CASE("vector kernels agree with the scalar reference") {
  if (!k::isa_supported(k::Isa::avx2)) {
    MESSAGE("AVX2 unavailable; skipping equivalence check");
    return;
  }
  for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u}) {
    const auto x = mixed_points(n, 11 + n);
    for (double a : {0.0, 0.3, -1.0, 5.0, -12.0, 100.0}) {
      const Abs scale = abs_sums(x, a);
      const double s0 = k::scalar::sum_zeta0(x.data(), x.size(), a);
      const double v0 = k::avx2::sum_zeta0(x.data(), x.size(), a);
      CHECK(std::fabs(s0 - v0) <= 1e-12 * scale.zeta0 + 1e-300);
      const double s1 = k::scalar::sum_x_zeta1(x.data(), x.size(), a);
      const double v1 = k::avx2::sum_x_zeta1(x.data(), x.size(), a);
      CHECK(std::fabs(s1 - v1) <= 1e-12 * scale.xz1 + 1e-300);
      const double s2 = k::scalar::sum_x2_zeta1p(x.data(), x.size(), a);
      const double v2 = k::avx2::sum_x2_zeta1p(x.data(), x.size(), a);
      CHECK(std::fabs(s2 - v2) <= 1e-12 * scale.x2z1p + 1e-300);
    }
  }
}

TEST_CASE("vector zeta0 per element") {
  if (!k::isa_supported(k::Isa::avx2)) return;
  for (double x = -45.0; x <= 45.0; x += 0.01) {
    const double s = zeta0(x);
    const double v = k::avx2::sum_zeta0(&x, 1, 1.0);
    REQUIRE(std::fabs(s - v) <= 1e-13 * std::max(1.0, std::fabs(s)));
    const double z1 = zeta1(x);
    const double v1 = k::avx2::sum_x_zeta1(&x, 1, 1.0) / (x == 0.0 ? 1.0 : x);
    // the vector exp flushes results below e^-708 to zero
    if (x != 0.0) REQUIRE(std::fabs(z1 - v1) <= 1e-13 * z1 + 1e-300);
  }
}

TEST_CASE("fused SN sums") {
  const auto y = mixed_points(257, 3);
  const double xi = 0.4, inv_omega = 1.0 / 1.7, alpha = 3.2;
  const auto s = k::scalar::sn_sums(y.data(), y.size(), xi, inv_omega, alpha);
  double u2 = 0.0, z0 = 0.0;
  for (double v : y) {
    const double u = (v - xi) * inv_omega;
    u2 += u * u;
    z0 += zeta0(alpha * u);
  }
  CHECK(s.sum_u2 == doctest::Approx(u2).epsilon(1e-14));
  CHECK(s.sum_zeta0 == doctest::Approx(z0).epsilon(1e-14));
  if (k::isa_supported(k::Isa::avx2)) {
    const auto v = k::avx2::sn_sums(y.data(), y.size(), xi, inv_omega, alpha);
    CHECK(std::fabs(v.sum_u2 - u2) <= 1e-12 * u2);
    CHECK(std::fabs(v.sum_zeta0 - z0) <= 1e-12 * abs_sums(y, 1.0).zeta0 * 10);
  }
}

TEST_CASE("kernels reject non-finite products") {
  std::vector<double> x = {1.0, 2.0, INFINITY, 3.0};
  CHECK_THROWS(k::sum_zeta0(x.data(), x.size(), 1.0));
  CHECK_THROWS(k::scalar::sum_zeta0(x.data(), x.size(), 1.0));
}
