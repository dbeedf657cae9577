#pragma once

// Penalty Q(alpha*) = c1 log(1 + c2 alpha*^2) and its coefficients.

#include <optional>
#include <string>
#include <vector>

namespace skewpen {

struct PenaltyCoeffs {
  enum class Provenance { sn_exact, st_exact, st_approx, custom };

  double c1 = 0.0;
  double c2 = 0.0;
  Provenance provenance = Provenance::custom;
  std::optional<double> nu;  // set for the two ST provenances

  /// c1 >= 0 and c2 > 0. c1 = 0 switches the penalty off, which the
  /// degenerate-penalty identity checks rely on.
  static PenaltyCoeffs custom(double c1, double c2);
  void validate() const;
  std::string describe() const;
};

const char* provenance_name(PenaltyCoeffs::Provenance p);

double q_value(const PenaltyCoeffs& c, double alpha_star_sq);
/// dQ/dalpha in the scalar case.
double q_prime(const PenaltyCoeffs& c, double alpha);

struct ECoeffs {
  double e1 = 0.0;
  double e2 = 0.0;
};

/// e1 = 1/3, e2 = E{X^2 zeta1(X)} / E{X^4 zeta1(X)}; computed once.
ECoeffs sn_e_coeffs();
PenaltyCoeffs sn_coeffs();

/// Exact skew-t coefficients by Student-t quadrature, memoized per nu.
ECoeffs st_e_coeffs_exact(double nu);
/// e2 (1 + 4 / (nu + gamma)).
double st_e2_approx(double nu);
/// g_nu = (nu + 2)(nu + 3) / (nu + 1)^2.
double st_g(double nu);
/// (1/3) (b_{nu+1} / b_{nu+3})^2 ((nu+2)/(nu+1))^3 with b_nu = 2 t(0; nu).
double st_e1_closed_form(double nu);

enum class StMode { exact, approx };
const char* st_mode_name(StMode m);
PenaltyCoeffs st_coeffs(double nu, StMode mode);

/// Logistic-based approximation -(3 alpha / 2) / (1 + 8 alpha^2 / pi^2).
double mbb_m(double alpha);
PenaltyCoeffs mbb_coeffs();

/// a_p(alpha) = E{Z^p zeta1(alpha Z)^2}, Z ~ SN(0,1,alpha), via the
/// standard-normal rewrite.
double sn_a(int p, double alpha);
/// Exact one-parameter M(alpha) = -(alpha/2) a4 / a2.
double sn_m_exact(double alpha);

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double max_abs_residual = 0.0;
  std::vector<double> nu_grid;
  std::vector<double> e2_exact;
};

/// 25 log-spaced points on [0.25, 250].
std::vector<double> line_fit_grid();
/// Least squares of log(e2nu / e2 - 1) on log(nu + gamma) over the grid.
LineFit line_fit_check();

}  // namespace skewpen
