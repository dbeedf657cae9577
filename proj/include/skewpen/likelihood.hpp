#pragma once

// Log-likelihood and penalized log-likelihood for SN / ST models, the
// optimizer parameterization, profile deviance and the score diagnostic.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skewpen/distributions.hpp"
#include "skewpen/penalty.hpp"

namespace skewpen {

/// How the penalty coefficients are chosen. `automatic` means SN
/// coefficients for SN, exact ST coefficients when nu is pinned and the
/// closed-form approximation when nu is free.
struct PenaltySpec {
  enum class Mode { automatic, sn, st_exact, st_approx, custom };
  Mode mode = Mode::automatic;
  std::optional<PenaltyCoeffs> coeffs;  // used when mode == custom

  static PenaltySpec fixed(const PenaltyCoeffs& c) { return {Mode::custom, c}; }
};

struct ModelSpec {
  Family family = Family::SN;
  int dim = 1;
  // Pinned components (d = 1 only for xi, omega, alpha).
  std::optional<double> fixed_xi;
  std::optional<double> fixed_omega;
  std::optional<double> fixed_alpha;
  std::optional<double> fixed_nu;
  PenaltySpec penalty;
  double nu_lower = 0.1;
  double nu_upper = 1e6;

  static ModelSpec sn(int d = 1);
  static ModelSpec st(int d = 1, std::optional<double> nu = {});
  /// SN(0, 1, alpha): only alpha free.
  static ModelSpec one_parameter();

  bool is_one_parameter_sn() const;
  bool nu_free() const { return family == Family::ST && !fixed_nu; }
  void validate() const;
  std::string describe() const;

  /// Penalty coefficients at a given nu (ignored for SN).
  PenaltyCoeffs penalty_coeffs(std::optional<double> nu) const;
};

/// Maps unconstrained optimizer vectors to DirectParams and back.
/// Layout: xi (d), log-Cholesky of Omega (d(d+1)/2; for d = 1 just log omega),
/// alpha (d), then a bounded logit for nu. Pinned components are omitted.
class ParamCodec {
 public:
  explicit ParamCodec(const ModelSpec& spec);

  int size() const { return size_; }
  DirectParams decode(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd encode(const DirectParams& p) const;

  /// Direct coordinates used for standard errors: xi, omega (d = 1) or vech
  /// Omega, alpha, nu; pinned components omitted.
  Eigen::VectorXd to_direct(const DirectParams& p) const;
  DirectParams from_direct(const Eigen::VectorXd& v) const;
  std::vector<std::string> direct_names() const;
  /// Index of the (first) alpha component in the direct and internal layouts, or -1.
  int alpha_index() const { return alpha_index_; }

 private:
  ModelSpec spec_;
  int size_ = 0;
  int alpha_index_ = -1;
};

/// Rejects data unusable for fitting (wrong width, all rows identical,
/// too few observations for the free parameters).
void check_fit_data(const Dataset& data, const ModelSpec& spec);

double loglik(const DirectParams& p, const Dataset& data, const ModelSpec& spec);
double penalized_loglik(const DirectParams& p, const Dataset& data, const ModelSpec& spec);
/// Q(alpha*^2) at p under spec's penalty.
double penalty_at(const DirectParams& p, const ModelSpec& spec);

/// One-parameter pieces: l(alpha) = sum zeta0(alpha z) up to the Gaussian
/// constant, and its first two derivatives.
double one_param_loglik(const Dataset& z, double alpha);
double one_param_score(const Dataset& z, double alpha);
double one_param_hessian(const Dataset& z, double alpha);

struct ProfilePoint {
  double alpha = 0.0;
  double deviance = 0.0;
  double profile_loglik = 0.0;
  DirectParams nuisance_opt;
  bool converged = false;
};

/// D(alpha) = 2 {l*(alpha_hat) - l*(alpha)} over the grid, maximizing over
/// the remaining free parameters with warm starts along the grid. The
/// maximum l*(alpha_hat) is the larger of the unrestricted fit and the grid.
std::vector<ProfilePoint> profile_deviance(const std::vector<double>& alpha_grid, const Dataset& data,
                                           const ModelSpec& spec);

/// Cosine between the per-observation numerical scores for xi and alpha at p.
double score_cosine(const Dataset& data, const DirectParams& p);
/// score_cosine at alpha = 0 with (xi, omega) at the Gaussian fit (n >= 2)
/// or at (y1 - 1, 1) for a single observation.
double score_proportionality_check(const Dataset& data, const ModelSpec& spec);

}  // namespace skewpen
