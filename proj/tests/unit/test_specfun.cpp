#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "skewpen/quadrature.hpp"
#include "skewpen/specfun.hpp"

using namespace skewpen;

namespace {
double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }
}  // namespace

TEST_CASE("zeta0 at the centre and right tail") {
  CHECK(zeta0(0.0) == 0.0);
  CHECK(std::fabs(zeta0(40.0) - kLog2) < 1e-12);
  CHECK(zeta0(8.0) > 0.69);
}

TEST_CASE("zeta0 left tail against high-precision log erfc") {
  // mpmath, 40 digits
  CHECK(rel(zeta0(-10.0), -52.53813796995252526893) < 1e-10);
  CHECK(rel(zeta0(-30.0), -453.62809677578325179794) < 1e-12);
  CHECK(std::isfinite(zeta0(-40.0)));
  CHECK(std::isfinite(zeta0(-1e5)));
}

TEST_CASE("zeta0 is monotone across the switch point") {
  double prev = zeta0(-60.0);
  for (double x = -60.0; x <= 10.0; x += 0.01) {
    const double v = zeta0(x);
    REQUIRE(v >= prev);
    prev = v;
  }
}

TEST_CASE("zeta1 values") {
  CHECK(zeta1(0.0) == doctest::Approx(kSqrt2OverPi).epsilon(1e-15));
  const double z30 = zeta1(30.0);
  CHECK(z30 > 0.0);
  CHECK(z30 < 1e-100);
  CHECK(rel(zeta1(-30.0), 30.0 + 1.0 / 30.0) < 1e-3);
  // mpmath reference values
  CHECK(rel(zeta1(-30.0), 30.033259667433677037) < 1e-14);
  CHECK(rel(zeta1(-8.0), 8.1213681122361126807) < 1e-14);
  CHECK(rel(zeta1(-5.5), 5.6714103138973056227) < 1e-14);
  CHECK(rel(zeta1(-3.0), 3.2830986549304365069) < 1e-14);
  CHECK(rel(zeta1(-1.0), 1.5251352761609812091) < 1e-14);
  CHECK(rel(zeta1(2.0), 0.055247862678989959102) < 1e-14);
  CHECK(rel(zeta1(8.0), 5.0522710835368954309e-15) < 1e-12);
}

TEST_CASE("zeta1 is the derivative of zeta0") {
  const double h = 1e-5;
  for (double x = -8.0; x <= 8.0; x += 0.125) {
    const double fd = (zeta0(x + h) - zeta0(x - h)) / (2 * h);
    CHECK(std::fabs(fd - zeta1(x)) < 1e-6);
  }
}

TEST_CASE("zeta1_prime matches finite differences") {
  const double h = 1e-5;
  for (double x : {-20.0, -6.0, -4.9, -1.0, 0.0, 3.0}) {
    const double fd = (zeta1(x + h) - zeta1(x - h)) / (2 * h);
    CHECK(std::fabs(fd - zeta1_prime(x)) < 1e-6 * (1 + std::fabs(fd)));
  }
}

TEST_CASE("non-finite inputs are rejected") {
  CHECK_THROWS_AS(zeta0(NAN), std::invalid_argument);
  CHECK_THROWS_AS(zeta0(INFINITY), std::invalid_argument);
  CHECK_THROWS_AS(zeta1(-INFINITY), std::invalid_argument);
  CHECK_THROWS_AS(t_pdf(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(t_cdf(0.0, -1.0), std::invalid_argument);
}

TEST_CASE("Student t basics") {
  CHECK(t_cdf(0.0, 7.3) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t_pdf(0.0, 1.0) == doctest::Approx(1.0 / M_PI).epsilon(1e-14));
  CHECK(t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(rel(t_cdf(-3.0, 2.5), 0.036288047774515921947) < 1e-12);
  CHECK(rel(t_cdf(1.7, 0.7), 0.79578116598136261840) < 1e-12);
  double prev = 0.0;
  for (double x = -50.0; x <= 50.0; x += 0.25) {
    const double c = t_cdf(x, 0.4);
    REQUIRE(c >= prev);
    prev = c;
  }
}

TEST_CASE("Student t density integrates to one") {
  for (double nu : {0.3, 1.0, 4.5, 40.0}) {
    const double v = integrate_real_line([&](double x) { return t_pdf(x, nu); }).value;
    CHECK(std::fabs(v - 1.0) < 1e-9);
  }
}

TEST_CASE("Student t approaches the normal density") {
  for (double x = -5.0; x <= 5.0; x += 0.1) {
    CHECK(std::fabs(t_pdf(x, 1e6) - std::exp(norm_logpdf(x))) < 1e-5);
  }
}

TEST_CASE("zeta1_t") {
  for (double nu : {0.5, 3.0, 30.0}) {
    CHECK(zeta1_t(0.0, nu) == doctest::Approx(2 * t_pdf(0.0, nu)).epsilon(1e-14));
  }
  CHECK(rel(zeta1_t(-50.0, 2.0), 0.039976017586570423840) < 1e-8);
  CHECK(rel(zeta1_t(-1e6, 0.3), 3.0000000000009147093e-7) < 1e-8);
  for (double x : {-2.0, 0.0, 2.0}) CHECK(std::fabs(zeta1_t(x, 1e6) - zeta1(x)) < 1e-4);
}
