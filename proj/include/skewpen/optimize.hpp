#pragma once

// Minimizers and numerical derivatives on Eigen vectors. Objectives may
// return +inf (or throw) to signal an invalid point; both are treated as
// "infinitely bad" rather than as errors.

#include <functional>

#include <Eigen/Dense>

namespace skewpen {

using Objective = std::function<double(const Eigen::VectorXd&)>;
using ScalarFn = std::function<double(double)>;

struct OptimOptions {
  int nm_max_iter = 4000;
  double nm_ftol = 1e-12;
  double nm_step = 0.5;
  int bfgs_max_iter = 400;
  double gtol = 1e-7;
  double ftol = 1e-14;
};

struct OptimResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Evaluates f, mapping exceptions and NaN to +inf.
double safe_eval(const Objective& f, const Eigen::VectorXd& x);

OptimResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const OptimOptions& opts = {});
/// BFGS with central-difference gradients and a backtracking line search.
OptimResult bfgs(const Objective& f, const Eigen::VectorXd& x0, const OptimOptions& opts = {});
/// Simplex search followed by BFGS refinement.
OptimResult minimize(const Objective& f, const Eigen::VectorXd& x0, const OptimOptions& opts = {});

Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step = 1e-6);
Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& x, double rel_step = 1e-4);

/// Root of f in [a, b] with f(a) f(b) <= 0 (Brent). Throws if not bracketed.
double brent_root(const ScalarFn& f, double a, double b, double xtol = 1e-12, int max_iter = 200);
/// Same, reusing known endpoint values.
double brent_root(const ScalarFn& f, double a, double b, double fa, double fb, double xtol, int max_iter = 200);

}  // namespace skewpen
