#pragma once

// MLE, MPLE and the one-parameter Sartori-Firth estimator.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skewpen/distributions.hpp"
#include "skewpen/likelihood.hpp"
#include "skewpen/optimize.hpp"

namespace skewpen {

enum class Method { MLE, MPLE, SF, WBAR };
const char* method_name(Method m);
Method parse_method(const std::string& s);

struct FitOptions {
  double divergence_threshold = 100.0;
  bool compute_stderr = true;
  bool keep_trace = false;
  OptimOptions optim;
  /// Extra starting point tried alongside the default ones.
  std::optional<DirectParams> start;
  /// Also start from the Gaussian fit (alpha = 0) and keep the best. By
  /// default that start is only a fallback when the moment start fails. For
  /// the 3-parameter MPLE alpha = 0 is always a local maximum of the
  /// penalized profile, so this switch can move the answer there.
  bool multi_start = false;
};

struct FitResult {
  Method method = Method::MLE;
  DirectParams estimates;
  double loglik_at_opt = 0.0;
  std::optional<double> penalized_loglik_at_opt;
  std::vector<std::string> param_names;  // direct layout of std_errors
  std::optional<Eigen::VectorXd> std_errors;
  std::optional<Eigen::MatrixXd> obs_info;
  std::string stderr_note;  // why std_errors is absent, if it is
  bool diverged = false;
  std::string divergence_rule;  // which rule flagged the divergence
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> optimizer_trace;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

FitResult fit_mle(const Dataset& data, const ModelSpec& spec, const FitOptions& opts = {});
FitResult fit_mple(const Dataset& data, const ModelSpec& spec, const FitOptions& opts = {});
/// Root of l'(alpha) + M(alpha) for SN(0, 1, alpha) data.
FitResult fit_sf_one_param(const Dataset& z, const FitOptions& opts = {});

/// Exact M(alpha) for the skew-t with nu degrees of freedom (xi, omega known).
double st_m_exact(double alpha, double nu);

/// Standard errors from the inverse of -l_p'' in direct coordinates. Throws
/// FitError if the negative Hessian is not positive definite.
Eigen::VectorXd stderr_from_penalized_info(const FitResult& fit, const Dataset& data, const ModelSpec& spec);

/// Method-of-moments start for d = 1 (|gamma1| clamped to 0.95).
DirectParams moment_start(const Dataset& data, const ModelSpec& spec);

/// Univariate start near the half-normal limit: xi just beyond the sample
/// edge on the side given by sign, omega the rms distance from it.
DirectParams boundary_start(const Dataset& data, double sign);

}  // namespace skewpen
