#pragma once

// Skew-normal and skew-t distributions in the direct parameterization
// (xi, Omega, alpha[, nu]).

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace skewpen {

enum class Family { SN, ST };

const char* family_name(Family f);

struct DirectParams {
  Eigen::VectorXd xi;
  Eigen::MatrixXd omega_mat;  // Omega; for d = 1 this holds omega^2
  Eigen::VectorXd alpha;
  std::optional<double> nu;   // absent for the SN family

  /// d = 1 factory. Takes the scale omega (not omega^2).
  static DirectParams scalar(double xi, double omega, double alpha, std::optional<double> nu = {});
  static DirectParams make(Eigen::VectorXd xi, Eigen::MatrixXd omega_mat, Eigen::VectorXd alpha,
                           std::optional<double> nu = {});

  int dim() const { return static_cast<int>(xi.size()); }
  Family family() const { return nu ? Family::ST : Family::SN; }

  /// Diagonal of omega: square roots of diag(Omega).
  Eigen::VectorXd omega() const;
  /// Correlation matrix omega^-1 Omega omega^-1.
  Eigen::MatrixXd omega_bar() const;

  /// d = 1 accessors.
  double xi1() const { return xi[0]; }
  double omega1() const;
  double alpha1() const { return alpha[0]; }

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

/// n x d matrix of finite observations, one per row.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(Eigen::MatrixXd rows);
  static Dataset column(const std::vector<double>& values);

  Eigen::Index n() const { return x_.rows(); }
  Eigen::Index d() const { return x_.cols(); }
  const Eigen::MatrixXd& rows() const { return x_; }
  /// Contiguous storage of column j (column-major).
  const double* column_data(Eigen::Index j) const { return x_.col(j).data(); }
  std::vector<double> column_vector(Eigen::Index j) const;

 private:
  Eigen::MatrixXd x_;
};

double sn_logpdf(const Eigen::VectorXd& x, const DirectParams& p);
double st_logpdf(const Eigen::VectorXd& x, const DirectParams& p);
double logpdf(const Eigen::VectorXd& x, const DirectParams& p);

/// Scalar shortcuts for d = 1.
double sn_logpdf(double x, double xi, double omega, double alpha);
double st_logpdf(double x, double xi, double omega, double alpha, double nu);

/// i.i.d. draws, deterministic in `seed`.
Dataset sample(const DirectParams& p, std::size_t n, std::uint64_t seed);
Dataset sample(const DirectParams& p, std::size_t n, std::mt19937_64& rng);

/// alpha*^2 = alpha' Omega_bar alpha, returned as its square root.
double alpha_star(const DirectParams& p);
double alpha_star_sq(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& omega_bar);

double delta_of_alpha(double alpha);

/// SN index of skewness; alpha = +-inf gives the half-normal bound.
double skewness_gamma1(double alpha);

/// Probability that all n one-parameter observations share a sign.
double prob_divergent_mle(std::size_t n, double alpha);

/// Pr{Z < 0} for Z ~ SN(0, 1, alpha), by quadrature of the density.
double prob_negative(double alpha);

struct CanonicalForm {
  Dataset data;
  double alpha_star = 0.0;
  /// z* = transform * (y - xi)
  Eigen::MatrixXd transform;
};

/// Maps an SN sample to coordinates whose first component is SN(0,1,alpha*)
/// and the rest standard normal, independent. Rejects alpha = 0.
CanonicalForm canonical_transform(const Dataset& data, const DirectParams& p);

}  // namespace skewpen
