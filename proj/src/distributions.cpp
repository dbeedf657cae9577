#include "skewpen/distributions.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "skewpen/quadrature.hpp"
#include "skewpen/specfun.hpp"

namespace skewpen {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

double log_det_chol(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

const char* family_name(Family f) { return f == Family::SN ? "SN" : "ST"; }

DirectParams DirectParams::scalar(double xi, double omega, double alpha, std::optional<double> nu) {
  DirectParams p;
  p.xi = Eigen::VectorXd::Constant(1, xi);
  p.omega_mat = Eigen::MatrixXd::Constant(1, 1, omega * omega);
  p.alpha = Eigen::VectorXd::Constant(1, alpha);
  p.nu = nu;
  if (!(omega > 0.0)) fail("scale omega must be positive");
  p.validate();
  return p;
}

DirectParams DirectParams::make(Eigen::VectorXd xi, Eigen::MatrixXd omega_mat, Eigen::VectorXd alpha,
                                std::optional<double> nu) {
  DirectParams p{std::move(xi), std::move(omega_mat), std::move(alpha), nu};
  p.validate();
  return p;
}

Eigen::VectorXd DirectParams::omega() const { return omega_mat.diagonal().array().sqrt(); }

Eigen::MatrixXd DirectParams::omega_bar() const {
  const Eigen::VectorXd inv = omega().cwiseInverse();
  return inv.asDiagonal() * omega_mat * inv.asDiagonal();
}

double DirectParams::omega1() const { return std::sqrt(omega_mat(0, 0)); }

void DirectParams::validate() const {
  const auto d = xi.size();
  if (d < 1) fail("dimension must be at least 1");
  if (omega_mat.rows() != d || omega_mat.cols() != d) fail("Omega must be d x d");
  if (alpha.size() != d) fail("alpha must have length d");
  if (!xi.allFinite() || !omega_mat.allFinite() || !alpha.allFinite()) fail("parameters must be finite");
  if ((omega_mat - omega_mat.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + omega_mat.cwiseAbs().maxCoeff()))
    fail("Omega must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(omega_mat);
  if (llt.info() != Eigen::Success) fail("Omega must be positive definite");
  if (nu && !(*nu > 0.0 && std::isfinite(*nu))) fail("nu must be positive and finite");
}

Dataset::Dataset(Eigen::MatrixXd rows) : x_(std::move(rows)) {
  if (x_.rows() < 1) fail("dataset must contain at least one observation");
  if (x_.cols() < 1) fail("dataset must have at least one column");
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    for (Eigen::Index j = 0; j < x_.cols(); ++j) {
      if (!std::isfinite(x_(i, j))) {
        std::ostringstream os;
        os << "non-finite value in observation " << i + 1 << ", column " << j + 1;
        fail(os.str());
      }
    }
  }
}

Dataset Dataset::column(const std::vector<double>& values) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = values[i];
  return Dataset(std::move(m));
}

std::vector<double> Dataset::column_vector(Eigen::Index j) const {
  return std::vector<double>(x_.col(j).data(), x_.col(j).data() + x_.rows());
}

double sn_logpdf(double x, double xi, double omega, double alpha) {
  const double z = (x - xi) / omega;
  return norm_logpdf(z) - std::log(omega) + zeta0(alpha * z);
}

double st_logpdf(double x, double xi, double omega, double alpha, double nu) {
  const double z = (x - xi) / omega;
  const double w = alpha * z * std::sqrt((nu + 1.0) / (nu + z * z));
  return kLog2 + t_logpdf(z, nu) - std::log(omega) + t_logcdf(w, nu + 1.0);
}

double sn_logpdf(const Eigen::VectorXd& x, const DirectParams& p) {
  if (p.nu) fail("sn_logpdf: parameters carry nu (skew-t family)");
  const auto d = p.dim();
  if (x.size() != d) fail("sn_logpdf: dimension mismatch");
  if (d == 1) return sn_logpdf(x[0], p.xi[0], p.omega1(), p.alpha[0]);
  Eigen::LLT<Eigen::MatrixXd> llt(p.omega_mat);
  if (llt.info() != Eigen::Success) fail("Omega must be positive definite");
  const Eigen::VectorXd r = x - p.xi;
  const double qf = llt.matrixL().solve(r).squaredNorm();
  const double lphi = -0.5 * qf - 0.5 * log_det_chol(llt) - d * kLogSqrt2Pi;
  const double proj = p.alpha.dot(r.cwiseQuotient(p.omega()));
  return lphi + zeta0(proj);
}

double st_logpdf(const Eigen::VectorXd& x, const DirectParams& p) {
  if (!p.nu) fail("st_logpdf: nu is required");
  const double nu = *p.nu;
  detail::require_positive_nu(nu);
  const auto d = p.dim();
  if (x.size() != d) fail("st_logpdf: dimension mismatch");
  if (d == 1) return st_logpdf(x[0], p.xi[0], p.omega1(), p.alpha[0], nu);
  Eigen::LLT<Eigen::MatrixXd> llt(p.omega_mat);
  if (llt.info() != Eigen::Success) fail("Omega must be positive definite");
  const Eigen::VectorXd r = x - p.xi;
  const double qf = llt.matrixL().solve(r).squaredNorm();
  const double ltd = boost::math::lgamma(0.5 * (nu + d)) - boost::math::lgamma(0.5 * nu) -
                     0.5 * d * std::log(nu * M_PI) - 0.5 * log_det_chol(llt) -
                     0.5 * (nu + d) * std::log1p(qf / nu);
  const double proj = p.alpha.dot(r.cwiseQuotient(p.omega())) * std::sqrt((nu + d) / (qf + nu));
  return kLog2 + ltd + t_logcdf(proj, nu + d);
}

double logpdf(const Eigen::VectorXd& x, const DirectParams& p) {
  return p.nu ? st_logpdf(x, p) : sn_logpdf(x, p);
}

Dataset sample(const DirectParams& p, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample(p, n, rng);
}

Dataset sample(const DirectParams& p, std::size_t n, std::mt19937_64& rng) {
  p.validate();
  if (n < 1) fail("sample: n must be at least 1");
  const int d = p.dim();
  const Eigen::MatrixXd obar = p.omega_bar();
  const Eigen::VectorXd oa = obar * p.alpha;
  const Eigen::VectorXd delta = oa / std::sqrt(1.0 + p.alpha.dot(oa));
  Eigen::LLT<Eigen::MatrixXd> llt(obar - delta * delta.transpose());
  if (llt.info() != Eigen::Success) fail("sample: degenerate correlation structure");
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::VectorXd om = p.omega();

  std::normal_distribution<double> norm(0.0, 1.0);
  std::optional<std::chi_squared_distribution<double>> chi;
  if (p.nu) chi.emplace(*p.nu);

  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
  Eigen::VectorXd u(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double u0 = std::fabs(norm(rng));
    for (int j = 0; j < d; ++j) u[j] = norm(rng);
    Eigen::VectorXd z = delta * u0 + L * u;
    if (chi) z /= std::sqrt((*chi)(rng) / *p.nu);
    out.row(static_cast<Eigen::Index>(i)) = (p.xi + om.cwiseProduct(z)).transpose();
  }
  return Dataset(std::move(out));
}

double alpha_star_sq(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& omega_bar) {
  return alpha.dot(omega_bar * alpha);
}

double alpha_star(const DirectParams& p) { return std::sqrt(alpha_star_sq(p.alpha, p.omega_bar())); }

double delta_of_alpha(double alpha) {
  detail::require_finite(alpha, "delta_of_alpha");
  if (std::fabs(alpha) > 1e150) return std::copysign(1.0, alpha);
  return alpha / std::sqrt(1.0 + alpha * alpha);
}

double skewness_gamma1(double alpha) {
  if (std::isnan(alpha)) fail("skewness_gamma1: NaN shape");
  const double delta = std::isinf(alpha) ? std::copysign(1.0, alpha) : delta_of_alpha(alpha);
  const double mu = kSqrt2OverPi * delta;
  return 0.5 * (4.0 - M_PI) * mu * mu * mu / std::pow(1.0 - mu * mu, 1.5);
}

double prob_divergent_mle(std::size_t n, double alpha) {
  if (n < 1) fail("prob_divergent_mle: n must be at least 1");
  detail::require_finite(alpha, "prob_divergent_mle");
  const double a = std::atan(alpha) / M_PI;
  return std::pow(0.5 - a, double(n)) + std::pow(0.5 + a, double(n));
}

double prob_negative(double alpha) {
  detail::require_finite(alpha, "prob_negative");
  // the density vanishes like phi(x) Phi(alpha x); 40 standard units is ample
  const double lo = -40.0 / std::sqrt(1.0 + alpha * alpha) - 40.0;
  return integrate([&](double x) { return std::exp(sn_logpdf(x, 0.0, 1.0, alpha)); }, lo, 0.0, 1e-13).value;
}

CanonicalForm canonical_transform(const Dataset& data, const DirectParams& p) {
  if (p.nu) fail("canonical_transform: skew-normal parameters required");
  const int d = p.dim();
  if (data.d() != d) fail("canonical_transform: dimension mismatch");
  const Eigen::VectorXd om = p.omega();
  const Eigen::VectorXd inv_om = om.cwiseInverse();
  if (d == 1) {
    CanonicalForm out;
    out.transform = Eigen::MatrixXd::Constant(1, 1, inv_om[0]);
    Eigen::MatrixXd z = (data.rows().array() - p.xi[0]) * inv_om[0];
    out.data = Dataset(std::move(z));
    out.alpha_star = std::fabs(p.alpha[0]);
    return out;
  }
  if (p.alpha.isZero(0.0)) fail("canonical_transform: alpha = 0 leaves the first axis undefined");
  const Eigen::MatrixXd obar = p.omega_bar();
  Eigen::LLT<Eigen::MatrixXd> llt(obar);
  if (llt.info() != Eigen::Success) fail("canonical_transform: Omega_bar is not positive definite");
  const Eigen::MatrixXd C = llt.matrixL();
  const Eigen::VectorXd ca = C.transpose() * p.alpha;
  const double astar = ca.norm();
  const Eigen::VectorXd v = ca / astar;

  // Householder reflection sending e1 to v; its first column is v.
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd w = v;
  w[0] -= 1.0;
  const double wn = w.squaredNorm();
  if (wn > 1e-28) P -= 2.0 * w * w.transpose() / wn;

  const Eigen::MatrixXd Cinv = C.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
  CanonicalForm out;
  out.transform = P.transpose() * Cinv * inv_om.asDiagonal();
  const Eigen::MatrixXd centred = data.rows().rowwise() - p.xi.transpose();
  out.data = Dataset(centred * out.transform.transpose());
  out.alpha_star = astar;
  return out;
}

}  // namespace skewpen
