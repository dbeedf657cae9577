#include "skewpen/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "skewpen/estimators.hpp"
#include "skewpen/kernels.hpp"
#include "skewpen/optimize.hpp"
#include "skewpen/specfun.hpp"

namespace skewpen {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

}  // namespace

ModelSpec ModelSpec::sn(int d) {
  ModelSpec s;
  s.family = Family::SN;
  s.dim = d;
  return s;
}

ModelSpec ModelSpec::st(int d, std::optional<double> nu) {
  ModelSpec s;
  s.family = Family::ST;
  s.dim = d;
  s.fixed_nu = nu;
  return s;
}

ModelSpec ModelSpec::one_parameter() {
  ModelSpec s = sn(1);
  s.fixed_xi = 0.0;
  s.fixed_omega = 1.0;
  return s;
}

bool ModelSpec::is_one_parameter_sn() const {
  return family == Family::SN && dim == 1 && fixed_xi && fixed_omega && !fixed_alpha;
}

void ModelSpec::validate() const {
  if (dim < 1) fail("model dimension must be at least 1");
  if (dim > 1 && (fixed_xi || fixed_omega || fixed_alpha))
    fail("pinning xi, omega or alpha is supported only for d = 1");
  if (fixed_omega && !(*fixed_omega > 0.0)) fail("pinned omega must be positive");
  if (fixed_nu && family != Family::ST) fail("nu can only be pinned for the skew-t family");
  if (fixed_nu && !(*fixed_nu > 0.0 && std::isfinite(*fixed_nu))) fail("pinned nu must be positive");
  if (!(nu_lower > 0.0 && nu_upper > nu_lower)) fail("invalid nu bounds");
  if (penalty.mode == PenaltySpec::Mode::custom) {
    if (!penalty.coeffs) fail("custom penalty requires coefficients");
    penalty.coeffs->validate();
  }
  if (family == Family::SN &&
      (penalty.mode == PenaltySpec::Mode::st_exact || penalty.mode == PenaltySpec::Mode::st_approx))
    fail("skew-t penalty requested for a skew-normal model");
}

std::string ModelSpec::describe() const {
  std::ostringstream os;
  os << family_name(family) << " d=" << dim;
  if (fixed_xi) os << " xi=" << *fixed_xi;
  if (fixed_omega) os << " omega=" << *fixed_omega;
  if (fixed_alpha) os << " alpha=" << *fixed_alpha;
  if (fixed_nu) os << " nu=" << *fixed_nu;
  return os.str();
}

PenaltyCoeffs ModelSpec::penalty_coeffs(std::optional<double> nu) const {
  using M = PenaltySpec::Mode;
  switch (penalty.mode) {
    case M::custom:
      return *penalty.coeffs;
    case M::sn:
      return sn_coeffs();
    case M::st_exact:
    case M::st_approx: {
      const double v = nu ? *nu : (fixed_nu ? *fixed_nu : 0.0);
      return st_coeffs(v, penalty.mode == M::st_exact ? StMode::exact : StMode::approx);
    }
    case M::automatic:
      if (family == Family::SN) return sn_coeffs();
      if (fixed_nu) return st_coeffs(*fixed_nu, StMode::exact);
      if (!nu) fail("penalty_coeffs: nu required for a free-nu skew-t model");
      return st_coeffs(*nu, StMode::approx);
  }
  fail("penalty_coeffs: unknown mode");
}

// ---------------------------------------------------------------------------

ParamCodec::ParamCodec(const ModelSpec& spec) : spec_(spec) {
  spec_.validate();
  const int d = spec_.dim;
  int k = 0;
  if (!spec_.fixed_xi) k += d;
  if (!spec_.fixed_omega) k += d * (d + 1) / 2;
  if (!spec_.fixed_alpha) {
    alpha_index_ = k;
    k += d;
  }
  if (spec_.nu_free()) k += 1;
  size_ = k;
}

DirectParams ParamCodec::decode(const Eigen::VectorXd& th) const {
  const int d = spec_.dim;
  if (th.size() != size_) fail("ParamCodec::decode: size mismatch");
  DirectParams p;
  int k = 0;
  if (spec_.fixed_xi) {
    p.xi = Eigen::VectorXd::Constant(1, *spec_.fixed_xi);
  } else {
    p.xi = th.segment(k, d);
    k += d;
  }
  if (spec_.fixed_omega) {
    p.omega_mat = Eigen::MatrixXd::Constant(1, 1, *spec_.fixed_omega * *spec_.fixed_omega);
  } else {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < d; ++j) {
      for (int i = j; i < d; ++i) L(i, j) = (i == j) ? std::exp(th[k++]) : th[k++];
    }
    p.omega_mat = L * L.transpose();
  }
  if (spec_.fixed_alpha) {
    p.alpha = Eigen::VectorXd::Constant(1, *spec_.fixed_alpha);
  } else {
    p.alpha = th.segment(k, d);
    k += d;
  }
  if (spec_.family == Family::ST) {
    if (spec_.fixed_nu) {
      p.nu = *spec_.fixed_nu;
    } else {
      const double lo = std::log(spec_.nu_lower), hi = std::log(spec_.nu_upper);
      p.nu = std::exp(lo + (hi - lo) * sigmoid(th[k++]));
    }
  }
  return p;
}

Eigen::VectorXd ParamCodec::encode(const DirectParams& p) const {
  const int d = spec_.dim;
  Eigen::VectorXd th(size_);
  int k = 0;
  if (!spec_.fixed_xi) {
    th.segment(k, d) = p.xi;
    k += d;
  }
  if (!spec_.fixed_omega) {
    Eigen::LLT<Eigen::MatrixXd> llt(p.omega_mat);
    if (llt.info() != Eigen::Success) fail("ParamCodec::encode: Omega not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    for (int j = 0; j < d; ++j) {
      for (int i = j; i < d; ++i) th[k++] = (i == j) ? std::log(L(i, j)) : L(i, j);
    }
  }
  if (!spec_.fixed_alpha) {
    th.segment(k, d) = p.alpha;
    k += d;
  }
  if (spec_.nu_free()) {
    if (!p.nu) fail("ParamCodec::encode: nu missing");
    const double lo = std::log(spec_.nu_lower), hi = std::log(spec_.nu_upper);
    double s = (std::log(std::clamp(*p.nu, spec_.nu_lower, spec_.nu_upper)) - lo) / (hi - lo);
    s = std::clamp(s, 1e-9, 1.0 - 1e-9);
    th[k++] = std::log(s / (1.0 - s));
  }
  return th;
}

Eigen::VectorXd ParamCodec::to_direct(const DirectParams& p) const {
  const int d = spec_.dim;
  std::vector<double> v;
  if (!spec_.fixed_xi)
    for (int i = 0; i < d; ++i) v.push_back(p.xi[i]);
  if (!spec_.fixed_omega) {
    if (d == 1) {
      v.push_back(std::sqrt(p.omega_mat(0, 0)));
    } else {
      for (int j = 0; j < d; ++j)
        for (int i = j; i < d; ++i) v.push_back(p.omega_mat(i, j));
    }
  }
  if (!spec_.fixed_alpha)
    for (int i = 0; i < d; ++i) v.push_back(p.alpha[i]);
  if (spec_.nu_free()) v.push_back(*p.nu);
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

DirectParams ParamCodec::from_direct(const Eigen::VectorXd& v) const {
  const int d = spec_.dim;
  if (v.size() != size_) fail("ParamCodec::from_direct: size mismatch");
  DirectParams p;
  int k = 0;
  p.xi = spec_.fixed_xi ? Eigen::VectorXd::Constant(1, *spec_.fixed_xi) : Eigen::VectorXd(v.segment(k, d));
  if (!spec_.fixed_xi) k += d;
  if (spec_.fixed_omega) {
    p.omega_mat = Eigen::MatrixXd::Constant(1, 1, *spec_.fixed_omega * *spec_.fixed_omega);
  } else if (d == 1) {
    if (!(v[k] > 0.0)) fail("omega must be positive");
    p.omega_mat = Eigen::MatrixXd::Constant(1, 1, v[k] * v[k]);
    ++k;
  } else {
    p.omega_mat.resize(d, d);
    for (int j = 0; j < d; ++j)
      for (int i = j; i < d; ++i) p.omega_mat(i, j) = p.omega_mat(j, i) = v[k++];
  }
  p.alpha = spec_.fixed_alpha ? Eigen::VectorXd::Constant(1, *spec_.fixed_alpha) : Eigen::VectorXd(v.segment(k, d));
  if (!spec_.fixed_alpha) k += d;
  if (spec_.family == Family::ST) p.nu = spec_.fixed_nu ? *spec_.fixed_nu : v[k++];
  p.validate();
  return p;
}

std::vector<std::string> ParamCodec::direct_names() const {
  const int d = spec_.dim;
  std::vector<std::string> names;
  auto idx = [d](const char* base, int i) { return d == 1 ? std::string(base) : base + std::to_string(i + 1); };
  if (!spec_.fixed_xi)
    for (int i = 0; i < d; ++i) names.push_back(idx("xi", i));
  if (!spec_.fixed_omega) {
    if (d == 1) {
      names.push_back("omega");
    } else {
      for (int j = 0; j < d; ++j)
        for (int i = j; i < d; ++i) names.push_back("Omega" + std::to_string(i + 1) + std::to_string(j + 1));
    }
  }
  if (!spec_.fixed_alpha)
    for (int i = 0; i < d; ++i) names.push_back(idx("alpha", i));
  if (spec_.nu_free()) names.push_back("nu");
  return names;
}

// ---------------------------------------------------------------------------

void check_fit_data(const Dataset& data, const ModelSpec& spec) {
  spec.validate();
  if (data.d() != spec.dim) {
    std::ostringstream os;
    os << "data have " << data.d() << " columns, model expects " << spec.dim;
    fail(os.str());
  }
  const bool scale_free = !spec.fixed_omega;
  if (scale_free) {
    const Eigen::Index need = spec.dim + 2;
    if (data.n() < need) {
      std::ostringstream os;
      os << "need at least " << need << " observations, got " << data.n();
      fail(os.str());
    }
    const auto& x = data.rows();
    bool identical = true;
    for (Eigen::Index i = 1; i < x.rows() && identical; ++i) identical = (x.row(i) == x.row(0));
    if (identical) fail("all observations are identical; scale is not identifiable");
  }
}

namespace {

void check_dims(const DirectParams& p, const Dataset& data) {
  if (data.d() != p.dim()) fail("loglik: data and parameter dimensions differ");
}

double st_loglik_1d(const DirectParams& p, const Dataset& data) {
  const double nu = *p.nu;
  const double xi = p.xi[0], omega = p.omega1(), alpha = p.alpha[0];
  const double lognorm = boost::math::lgamma(0.5 * (nu + 1.0)) - boost::math::lgamma(0.5 * nu) -
                         0.5 * std::log(nu * M_PI);
  const double* y = data.column_data(0);
  const Eigen::Index n = data.n();
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = (y[i] - xi) / omega;
    const double w = alpha * z * std::sqrt((nu + 1.0) / (nu + z * z));
    s += lognorm - 0.5 * (nu + 1.0) * std::log1p(z * z / nu) + t_logcdf(w, nu + 1.0);
  }
  return s + n * (kLog2 - std::log(omega));
}

double loglik_md(const DirectParams& p, const Dataset& data) {
  const int d = p.dim();
  Eigen::LLT<Eigen::MatrixXd> llt(p.omega_mat);
  if (llt.info() != Eigen::Success) fail("Omega must be positive definite");
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const Eigen::MatrixXd R = data.rows().rowwise() - p.xi.transpose();
  const Eigen::MatrixXd Z = llt.matrixL().solve(R.transpose());
  const Eigen::VectorXd qf = Z.colwise().squaredNorm().transpose();
  const Eigen::VectorXd eta = p.alpha.cwiseQuotient(p.omega());
  Eigen::VectorXd proj = R * eta;
  const double n = static_cast<double>(data.n());
  if (!p.nu) {
    return -0.5 * qf.sum() - 0.5 * n * logdet - n * d * kLogSqrt2Pi +
           kernels::sum_zeta0(proj.data(), static_cast<std::size_t>(proj.size()), 1.0);
  }
  const double nu = *p.nu;
  const double c = boost::math::lgamma(0.5 * (nu + d)) - boost::math::lgamma(0.5 * nu) -
                   0.5 * d * std::log(nu * M_PI) - 0.5 * logdet + kLog2;
  double s = n * c;
  for (Eigen::Index i = 0; i < proj.size(); ++i) {
    s += -0.5 * (nu + d) * std::log1p(qf[i] / nu) + t_logcdf(proj[i] * std::sqrt((nu + d) / (qf[i] + nu)), nu + d);
  }
  return s;
}

}  // namespace

double loglik(const DirectParams& p, const Dataset& data, const ModelSpec& spec) {
  check_dims(p, data);
  if (spec.family == Family::ST && !p.nu) fail("loglik: skew-t model needs nu");
  if (spec.family == Family::SN && p.nu) fail("loglik: skew-normal model given nu");
  if (p.nu) detail::require_positive_nu(*p.nu);
  if (p.dim() == 1) {
    const double omega2 = p.omega_mat(0, 0);
    if (!(omega2 > 0.0) || !std::isfinite(omega2)) fail("omega must be positive");
    if (p.nu) return st_loglik_1d(p, data);
    const double omega = std::sqrt(omega2);
    const auto s = kernels::sn_sums(data.column_data(0), static_cast<std::size_t>(data.n()), p.xi[0],
                                    1.0 / omega, p.alpha[0]);
    const double n = static_cast<double>(data.n());
    return -n * (std::log(omega) + kLogSqrt2Pi) - 0.5 * s.sum_u2 + s.sum_zeta0;
  }
  return loglik_md(p, data);
}

double penalty_at(const DirectParams& p, const ModelSpec& spec) {
  const PenaltyCoeffs c = spec.penalty_coeffs(p.nu);
  const double a2 = p.dim() == 1 ? p.alpha[0] * p.alpha[0] : alpha_star_sq(p.alpha, p.omega_bar());
  return q_value(c, a2);
}

double penalized_loglik(const DirectParams& p, const Dataset& data, const ModelSpec& spec) {
  return loglik(p, data, spec) - penalty_at(p, spec);
}

double one_param_loglik(const Dataset& z, double alpha) {
  const auto s = kernels::sn_sums(z.column_data(0), static_cast<std::size_t>(z.n()), 0.0, 1.0, alpha);
  return -z.n() * kLogSqrt2Pi - 0.5 * s.sum_u2 + s.sum_zeta0;
}

double one_param_score(const Dataset& z, double alpha) {
  return kernels::sum_x_zeta1(z.column_data(0), static_cast<std::size_t>(z.n()), alpha);
}

double one_param_hessian(const Dataset& z, double alpha) {
  return kernels::sum_x2_zeta1p(z.column_data(0), static_cast<std::size_t>(z.n()), alpha);
}

// ---------------------------------------------------------------------------

std::vector<ProfilePoint> profile_deviance(const std::vector<double>& alpha_grid, const Dataset& data,
                                           const ModelSpec& spec) {
  if (spec.dim != 1) fail("profile_deviance: only d = 1 is supported");
  if (spec.fixed_alpha) fail("profile_deviance: alpha must be free");
  if (alpha_grid.empty()) fail("profile_deviance: empty grid");
  check_fit_data(data, spec);

  ModelSpec sub = spec;
  sub.penalty = PenaltySpec::fixed(PenaltyCoeffs::custom(0.0, 1.0));
  std::vector<ProfilePoint> out;
  out.reserve(alpha_grid.size());

  FitOptions fo;
  fo.compute_stderr = false;
  const FitResult mle = fit_mle(data, spec, fo);
  DirectParams warm = mle.estimates;
  OptimOptions oo;
  for (double a : alpha_grid) {
    detail::require_finite(a, "profile_deviance grid");
    ProfilePoint pt;
    pt.alpha = a;
    sub.fixed_alpha = a;
    const ParamCodec codec(sub);
    if (codec.size() == 0) {
      pt.nuisance_opt = codec.decode(Eigen::VectorXd());
      pt.profile_loglik = loglik(pt.nuisance_opt, data, sub);
      pt.converged = true;
    } else {
      DirectParams start = warm;
      start.alpha[0] = a;
      const Objective f = [&](const Eigen::VectorXd& th) { return -loglik(codec.decode(th), data, sub); };
      OptimResult r = minimize(f, codec.encode(start), oo);
      // second start from the unrestricted fit guards against a poor warm start
      DirectParams alt = mle.estimates;
      alt.alpha[0] = a;
      const OptimResult r2 = minimize(f, codec.encode(alt), oo);
      if (r2.f < r.f) r = r2;
      if (spec.family == Family::SN && !spec.fixed_xi && !spec.fixed_omega && a != 0.0) {
        DirectParams hs = boundary_start(data, a);
        hs.alpha[0] = a;
        hs.nu = start.nu;
        const OptimResult r3 = minimize(f, codec.encode(hs), oo);
        if (r3.f < r.f) r = r3;
      }
      pt.nuisance_opt = codec.decode(r.x);
      pt.profile_loglik = -r.f;
      pt.converged = r.converged && std::isfinite(r.f);
      warm = pt.nuisance_opt;
    }
    out.push_back(std::move(pt));
  }
  double best = mle.loglik_at_opt;
  if (mle.diverged && spec.family == Family::SN && !spec.fixed_xi && !spec.fixed_omega) {
    // alpha-hat is infinite: the reference is the half-normal supremum
    const Eigen::ArrayXd y = data.rows().col(0).array();
    const double n = static_cast<double>(y.size());
    const double edge = mle.estimates.alpha[0] > 0 ? y.minCoeff() : y.maxCoeff();
    best = std::max(best, n * kLog2 - 0.5 * n * (std::log(2.0 * M_PI) + 1.0) -
                              0.5 * n * std::log((y - edge).square().mean()));
  }
  for (const auto& pt : out) best = std::max(best, pt.profile_loglik);
  for (auto& pt : out) pt.deviance = std::max(0.0, 2.0 * (best - pt.profile_loglik));
  return out;
}

double score_cosine(const Dataset& data, const DirectParams& p) {
  if (p.dim() != 1 || p.nu) fail("score_cosine: univariate skew-normal only");
  const double xi = p.xi[0], omega = p.omega1(), alpha = p.alpha[0];
  const double h = 1e-6;
  double sxa = 0.0, sxx = 0.0, saa = 0.0;
  const double* y = data.column_data(0);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double hx = h * std::max(1.0, std::fabs(xi));
    const double ha = h * std::max(1.0, std::fabs(alpha));
    const double gx = (sn_logpdf(y[i], xi + hx, omega, alpha) - sn_logpdf(y[i], xi - hx, omega, alpha)) / (2 * hx);
    const double ga = (sn_logpdf(y[i], xi, omega, alpha + ha) - sn_logpdf(y[i], xi, omega, alpha - ha)) / (2 * ha);
    sxa += gx * ga;
    sxx += gx * gx;
    saa += ga * ga;
  }
  if (sxx == 0.0 || saa == 0.0) fail("score_cosine: a score vector is identically zero");
  return sxa / std::sqrt(sxx * saa);
}

double score_proportionality_check(const Dataset& data, const ModelSpec& spec) {
  if (spec.family != Family::SN || spec.dim != 1) fail("score_proportionality_check: SN with d = 1 only");
  const double* y = data.column_data(0);
  const Eigen::Index n = data.n();
  double xi, omega;
  if (spec.fixed_xi && spec.fixed_omega) {
    xi = *spec.fixed_xi;
    omega = *spec.fixed_omega;
  } else if (n >= 2) {
    const double m = data.rows().col(0).mean();
    xi = m;
    omega = std::sqrt((data.rows().col(0).array() - m).square().mean());
    if (!(omega > 0.0)) fail("score_proportionality_check: degenerate data");
  } else {
    xi = y[0] - 1.0;
    omega = 1.0;
  }
  return score_cosine(data, DirectParams::scalar(xi, omega, 0.0));
}

}  // namespace skewpen
