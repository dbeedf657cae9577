#include <doctest.h>

#include <cmath>
#include <random>

#include "skewpen/penalty.hpp"
#include "skewpen/quadrature.hpp"
#include "skewpen/specfun.hpp"

using namespace skewpen;

namespace {

// e2nu by mpmath quadrature (30 digits, explicit breakpoints) on the
// 25-point log grid over [0.25, 250].
constexpr double kE2NuOracle[25] = {
    1.5708349117548002, 1.4690423558665813, 1.3547184270139655, 1.2312521787942878, 1.1035152326413376,
    0.97717900110582535, 0.85773455597006753, 0.74955484807298417, 0.65532592686684351, 0.57597683287259654,
    0.51100649482032786, 0.45898829467481323, 0.418055569650606, 0.38626337665360564, 0.36180714155012491,
    0.34312547104833353, 0.3289269159047272, 0.31817489844407458, 0.31005416883288079, 0.3039324238548486,
    0.29932396027513942, 0.29585819153028057, 0.29325370540453325, 0.29129752888007586, 0.28982887599935783};

}  // namespace

TEST_CASE("penalty function shape") {
  const auto c = sn_coeffs();
  CHECK(q_value(c, 0.0) == 0.0);
  CHECK(q_value(c, 1.0) == doctest::Approx(c.c1 * std::log(1.0 + c.c2)).epsilon(1e-15));
  CHECK(q_value(c, 4.0) > q_value(c, 1.0));
  CHECK(q_value(c, 1e12) > 20.0);
  CHECK_THROWS(q_value(c, -1.0));
  CHECK(q_prime(c, 0.0) == 0.0);
  CHECK(q_prime(c, -2.0) == -q_prime(c, 2.0));
  CHECK(std::fabs(q_prime(c, 1e9)) < 1e-8);
}

TEST_CASE("q_prime is the derivative of q_value") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ua(-10.0, 10.0), uc(0.1, 3.0);
  for (int i = 0; i < 20; ++i) {
    const auto c = PenaltyCoeffs::custom(uc(rng), uc(rng));
    const double a = ua(rng), h = 1e-5;
    const double fd = (q_value(c, (a + h) * (a + h)) - q_value(c, (a - h) * (a - h))) / (2 * h);
    CHECK(std::fabs(fd - q_prime(c, a)) < 1e-7);
  }
  const auto sn = sn_coeffs();
  const double h = 1e-5;
  const double fd = (q_value(sn, (2 + h) * (2 + h)) - q_value(sn, (2 - h) * (2 - h))) / (2 * h);
  CHECK(std::fabs(fd - q_prime(sn, 2.0)) < 1e-7);
}

TEST_CASE("coefficient validation") {
  CHECK_THROWS(PenaltyCoeffs::custom(-1.0, 1.0));
  CHECK_THROWS(PenaltyCoeffs::custom(1.0, 0.0));
  CHECK_NOTHROW(PenaltyCoeffs::custom(0.0, 1.0));
  CHECK_THROWS(st_coeffs(0.0, StMode::exact));
  CHECK_THROWS(st_coeffs(-2.0, StMode::approx));
}

TEST_CASE("SN coefficients") {
  const auto e = sn_e_coeffs();
  CHECK(e.e1 == 1.0 / 3.0);
  CHECK(std::fabs(e.e2 - 0.2854166) < 1e-5);
  CHECK(std::fabs(e.e2 - 0.285416588261643614) < 1e-13);  // mpmath
  const auto c = sn_coeffs();
  CHECK(std::fabs(c.c1 - 0.875913) < 1e-5);
  CHECK(std::fabs(c.c2 - 0.856250) < 1e-5);
  CHECK(c.provenance == PenaltyCoeffs::Provenance::sn_exact);
}

TEST_CASE("a2/a4 is close to linear in alpha^2") {
  const auto e = sn_e_coeffs();
  const double a = 5.0;
  const double ratio = sn_a(2, a) / sn_a(4, a);
  CHECK(std::fabs(ratio / (e.e1 + e.e2 * 25.0) - 1.0) < 0.02);
  CHECK(sn_a(2, 0.0) / sn_a(4, 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  // M = -(alpha/2) a4/a2
  CHECK(sn_m_exact(a) == doctest::Approx(-0.5 * a * sn_a(4, a) / sn_a(2, a)).epsilon(1e-13));
}

// Independent mpmath quadrature gives Q - int(-M) = -0.0415 at alpha = 10,
// so the 0.02 bound cannot hold beyond alpha ~ 1.6. Kept as a visible,
// non-fatal check; the measured gap is pinned separately.
TEST_CASE("SN penalty tracks the integrated exact M within 0.02" * doctest::may_fail()) {
  const auto c = sn_coeffs();
  for (double a = 0.5; a <= 10.0; a += 0.5) {
    const double integral = integrate([](double t) { return -sn_m_exact(t); }, 0.0, a, 1e-10).value;
    CHECK(std::fabs(q_value(c, a * a) - integral) < 0.02);
  }
}

TEST_CASE("SN penalty minus integrated M matches the quadrature oracle") {
  const auto c = sn_coeffs();
  const double oracle[][2] = {{1, -0.0114640366958302814}, {2, -0.027947211522411526},
                              {3, -0.034793814283273615}, {5, -0.039318664206138367},
                              {10, -0.041497166798716608}};
  for (const auto& row : oracle) {
    const double a = row[0];
    const double integral = integrate([](double t) { return -sn_m_exact(t); }, 0.0, a, 1e-12).value;
    CHECK(std::fabs(q_value(c, a * a) - integral - row[1]) < 1e-9);
  }
}

TEST_CASE("logistic approximation of M") {
  CHECK(mbb_m(0.0) == 0.0);
  CHECK(mbb_m(2.0) < 0.0);
  const auto c = mbb_coeffs();
  for (double a : {-3.0, 0.4, 7.0}) CHECK(mbb_m(a) == doctest::Approx(-q_prime(c, a)).epsilon(1e-14));
  const double integral = integrate([](double t) { return -mbb_m(t); }, 0.0, 3.0, 1e-13).value;
  CHECK(std::fabs(integral - 3.0 * M_PI * M_PI / 32.0 * std::log(1.0 + 72.0 / (M_PI * M_PI))) < 1e-8);
}

TEST_CASE("skew-t first coefficient") {
  CHECK(st_g(1.0) == 3.0);
  CHECK(st_e_coeffs_exact(1.0).e1 == doctest::Approx(1.0).epsilon(1e-15));
  for (double nu : {0.5, 2.0, 10.0}) {
    CHECK(std::fabs(st_e_coeffs_exact(nu).e1 - st_e1_closed_form(nu)) < 1e-10);
  }
}

TEST_CASE("skew-t second coefficient against the quadrature oracle") {
  const auto grid = line_fit_grid();
  REQUIRE(grid.size() == 25);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double e2 = st_e_coeffs_exact(grid[i]).e2;
    CHECK(std::fabs(e2 / kE2NuOracle[i] - 1.0) < 1e-8);
  }
  CHECK(std::fabs(st_e_coeffs_exact(0.5).e2 / 1.3051707195873841 - 1.0) < 1e-8);
  CHECK(std::fabs(st_e_coeffs_exact(2.0).e2 / 0.72710501017738476 - 1.0) < 1e-8);
  CHECK(std::fabs(st_e_coeffs_exact(10.0).e2 / 0.39149785351751918 - 1.0) < 1e-8);
  CHECK(std::fabs(st_e_coeffs_exact(1e6).e2 - 0.2854166) < 1e-3);
  // e2nu(1) = 1 exactly: with nu = 1 both expectations reduce to the same integral
  CHECK(std::fabs(st_e_coeffs_exact(1.0).e2 - 1.0) < 1e-10);
}

TEST_CASE("skew-t coefficients decrease toward the SN value") {
  double prev = INFINITY;
  for (double nu : {0.3, 1.0, 3.0, 30.0, 300.0, 3e4}) {
    const double e2 = st_e_coeffs_exact(nu).e2;
    CHECK(e2 < prev);
    CHECK(e2 > sn_e_coeffs().e2);
    prev = e2;
  }
  const auto st = st_coeffs(1e6, StMode::exact);
  const auto sn = sn_coeffs();
  CHECK(std::fabs(st.c1 - sn.c1) < 1e-3);
  CHECK(std::fabs(st.c2 - sn.c2) < 1e-3);
  CHECK(st.provenance == PenaltyCoeffs::Provenance::st_exact);
  CHECK(st_coeffs(3.0, StMode::approx).provenance == PenaltyCoeffs::Provenance::st_approx);
}

TEST_CASE("approximate e2nu") {
  const double e2 = sn_e_coeffs().e2;
  CHECK(std::fabs(st_e2_approx(1e9) - e2) < 1e-8);
  CHECK(st_e2_approx(1.0) == doctest::Approx(e2 * (1.0 + 4.0 / (1.0 + kEulerGamma))).epsilon(1e-15));
  for (double nu : {0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 250.0}) {
    CHECK(std::fabs(st_e2_approx(nu) / st_e_coeffs_exact(nu).e2 - 1.0) <= 0.05);
  }
}

TEST_CASE("log-linear fit of e2nu") {
  const auto f = line_fit_check();
  CHECK(std::fabs(f.intercept - 1.37) < 0.05);
  CHECK(std::fabs(f.slope + 1.00) < 0.05);
  CHECK(f.max_abs_residual < 0.1);
}
