#include <doctest.h>

#include <cmath>
#include <numeric>

#include "skewpen/quadrature.hpp"
#include "skewpen/specfun.hpp"

using namespace skewpen;

TEST_CASE("Gauss-Hermite rule shape") {
  const auto& r = standard_normal_rule();
  CHECK(r.size() == 64);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(r.weights[i] > 0.0);
    s += r.weights[i];
  }
  CHECK(std::fabs(s - 1.0) < 1e-14);
  CHECK(std::fabs(r.apply([](double) { return 1.0; }) - 1.0) < 1e-10);
}

TEST_CASE("Gauss-Hermite integrates Hermite polynomials") {
  // He_k has zero mean for k >= 1; E He_k^2 = k!
  const auto& r = standard_normal_rule();
  for (int k = 1; k <= 10; ++k) {
    auto he = [k](double x) {
      double p0 = 1.0, p1 = x;
      for (int j = 1; j < k; ++j) {
        const double p2 = x * p1 - j * p0;
        p0 = p1;
        p1 = p2;
      }
      return p1;
    };
    CHECK(std::fabs(r.apply(he)) < 1e-10);
    const double norm = std::tgamma(k + 1.0);
    CHECK(std::fabs(r.apply([&](double x) { return he(x) * he(x); }) / norm - 1.0) < 1e-10);
  }
}

TEST_CASE("larger Gauss-Hermite rules stay positive and normalized") {
  for (std::size_t n : {128u, 256u, 512u}) {
    const auto r = gauss_hermite_rule(n);
    double s = 0.0;
    for (double w : r.weights) {
      CHECK(w >= 0.0);
      s += w;
    }
    CHECK(std::fabs(s - 1.0) < 1e-13);
    CHECK(std::fabs(r.apply([](double x) { return x * x * x * x; }) - 3.0) < 1e-11);
  }
}

TEST_CASE("normal expectations") {
  CHECK(std::fabs(expect_normal([](double x) { return x * x; }) - 1.0) < 1e-12);
  const double num = expect_normal([](double x) { return x * x * zeta1(x); });
  const double den = expect_normal([](double x) { return x * x * x * x * zeta1(x); });
  CHECK(std::fabs(num / den - 0.2854166) < 1e-5);
  CHECK(std::fabs(num / den - 0.285416588261643614) < 1e-12);
}

TEST_CASE("t expectations") {
  CHECK(std::fabs(expect_t([](double x) { return x * x; }, 5.0) - 5.0 / 3.0) < 1e-7);
  CHECK(std::fabs(expect_t([](double) { return 1.0; }, 0.25) - 1.0) < 1e-7);
  CHECK(std::fabs(expect_t([](double x) { return std::fabs(x); }, 1.5) -
                  2.0 * std::sqrt(1.5) * std::tgamma(1.25) / (std::sqrt(M_PI) * std::tgamma(0.75) * 0.5)) <
        1e-7);
}

TEST_CASE("adaptive real-line rule reproduces its integral") {
  AdaptiveOptions o;
  o.keep_rule = true;
  o.abs_tol = 1e-13;
  auto g = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI); };
  const auto r = integrate_real_line(g, o);
  CHECK(std::fabs(r.value - 1.0) < 1e-12);
  CHECK(r.rule.kind == QuadratureRule::Kind::adaptive_interval);
  CHECK(std::fabs(r.rule.apply([](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI); }) - 1.0) <
        1e-12);
}

TEST_CASE("finite interval integration") {
  const auto r = integrate([](double x) { return std::sin(x); }, 0.0, M_PI);
  CHECK(std::fabs(r.value - 2.0) < 1e-12);
  CHECK(std::fabs(integrate([](double x) { return x; }, 1.0, 0.0).value + 0.5) < 1e-14);
}
