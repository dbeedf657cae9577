#include "skewpen/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "skewpen/penalty.hpp"
#include "skewpen/quadrature.hpp"
#include "skewpen/specfun.hpp"

namespace skewpen {

const char* method_name(Method m) {
  switch (m) {
    case Method::MLE: return "MLE";
    case Method::MPLE: return "MPLE";
    case Method::SF: return "SF";
    case Method::WBAR: return "WBAR";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  if (u == "MLE") return Method::MLE;
  if (u == "MPLE") return Method::MPLE;
  if (u == "SF") return Method::SF;
  if (u == "WBAR") return Method::WBAR;
  throw std::invalid_argument("unknown estimator '" + s + "'");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

std::string fmt(const char* label, double v) {
  std::ostringstream os;
  os.precision(10);
  os << label << v;
  return os.str();
}

// Column moments -> SN direct parameters with |gamma1| capped.
void cp_to_dp(double m, double s, double g, double& xi, double& omega, double& alpha) {
  g = std::clamp(g, -0.95, 0.95);
  const double r = std::cbrt(2.0 * g / (4.0 - M_PI));
  const double mu = r / std::sqrt(1.0 + r * r);
  double delta = mu / kSqrt2OverPi;
  delta = std::clamp(delta, -0.99, 0.99);
  const double muz = kSqrt2OverPi * delta;
  alpha = delta / std::sqrt(1.0 - delta * delta);
  omega = s / std::sqrt(1.0 - muz * muz);
  xi = m - omega * muz;
}

Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd c = x.rowwise() - mean;
  Eigen::MatrixXd cov = c.transpose() * c / static_cast<double>(x.rows());
  const double ridge = 1e-10 * std::max(1e-300, cov.diagonal().maxCoeff());
  cov.diagonal().array() += ridge;
  return cov;
}

DirectParams apply_pins(const DirectParams& in, const ModelSpec& spec) {
  DirectParams p = in;
  if (spec.fixed_xi) p.xi[0] = *spec.fixed_xi;
  if (spec.fixed_omega) p.omega_mat(0, 0) = *spec.fixed_omega * *spec.fixed_omega;
  if (spec.fixed_alpha) p.alpha[0] = *spec.fixed_alpha;
  p.nu = spec.family == Family::ST ? std::optional<double>(spec.fixed_nu.value_or(10.0)) : std::nullopt;
  return p;
}

DirectParams normal_start(const Dataset& data, const ModelSpec& spec) {
  DirectParams p;
  p.xi = data.rows().colwise().mean().transpose();
  p.omega_mat = sample_cov(data.rows());
  p.alpha = Eigen::VectorXd::Zero(spec.dim);
  return apply_pins(p, spec);
}

struct Search {
  OptimResult best;
  int iterations = 0;
  std::vector<std::string> trace;
};

Search best_of_starts(const Objective& f, const ParamCodec& codec, const std::vector<DirectParams>& starts,
                      const std::vector<std::string>& labels, const FitOptions& opts) {
  Search s;
  s.best.f = kInf;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    Eigen::VectorXd x0;
    try {
      x0 = codec.encode(starts[i]);
    } catch (const std::exception&) {
      continue;
    }
    const OptimResult r = minimize(f, x0, opts.optim);
    s.iterations += r.iterations;
    if (opts.keep_trace) s.trace.push_back(labels[i] + ": " + fmt("f=", r.f) + (r.converged ? " converged" : ""));
    if (r.f < s.best.f || s.best.x.size() == 0) s.best = r;
  }
  if (s.best.x.size() == 0 || !std::isfinite(s.best.f)) throw FitError("no starting point gave a finite objective");
  return s;
}

std::vector<DirectParams> default_starts(const Dataset& data, const ModelSpec& spec, const FitOptions& opts,
                                         std::vector<std::string>& labels) {
  std::vector<DirectParams> v;
  v.push_back(moment_start(data, spec));
  labels.push_back("moments");
  if (opts.multi_start) {
    v.push_back(normal_start(data, spec));
    labels.push_back("normal");
  }
  if (opts.start) {
    v.push_back(apply_pins(*opts.start, spec));
    if (opts.start->nu && spec.nu_free()) v.back().nu = opts.start->nu;
    labels.push_back("user");
  }
  return v;
}

struct InfoResult {
  Eigen::VectorXd se;
  Eigen::MatrixXd info;
};

InfoResult info_and_se(const DirectParams& est, const Dataset& data, const ModelSpec& spec, bool penalized) {
  const ParamCodec codec(spec);
  if (codec.size() == 0) throw FitError("no free parameters");
  const Eigen::VectorXd v = codec.to_direct(est);
  const Objective neg = [&](const Eigen::VectorXd& x) {
    const DirectParams p = codec.from_direct(x);
    return -(penalized ? penalized_loglik(p, data, spec) : loglik(p, data, spec));
  };
  const Eigen::MatrixXd H = numerical_hessian(neg, v);
  if (!H.allFinite()) throw FitError("information matrix has non-finite entries");
  const Eigen::MatrixXd Hs = 0.5 * (H + H.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(Hs);
  if (llt.info() != Eigen::Success) throw FitError("observed information is not positive definite");
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(Hs.rows(), Hs.cols()));
  return {cov.diagonal().cwiseSqrt(), Hs};
}

void attach_stderr(FitResult& r, const Dataset& data, const ModelSpec& spec, bool penalized, const FitOptions& opts) {
  r.param_names = ParamCodec(spec).direct_names();
  if (!opts.compute_stderr) return;
  if (r.diverged) {
    r.stderr_note = "not computed: estimate diverged";
    return;
  }
  try {
    auto ir = info_and_se(r.estimates, data, spec, penalized);
    r.std_errors = std::move(ir.se);
    r.obs_info = std::move(ir.info);
  } catch (const FitError& e) {
    r.stderr_note = e.what();
  }
}

// Standardized one-parameter data z = (y - xi0) / omega0.
Dataset standardized(const Dataset& data, const ModelSpec& spec) {
  const double xi = *spec.fixed_xi, om = *spec.fixed_omega;
  if (xi == 0.0 && om == 1.0) return data;
  return Dataset((data.rows().array() - xi) / om);
}

// Candidate maxima of an objective along alpha whose derivative is psi:
// scan outward from 0 on a doubling grid, keep sign changes from
// +sgn to -sgn and polish each with Brent.
std::vector<double> outward_maxima(const ScalarFn& psi, double dir, double far) {
  std::vector<double> roots;
  double a = 0.0, fa = psi(0.0) * dir;
  for (double b = 1.0 / 16.0; a < far; b *= 2.0) {
    b = std::min(b, far);
    const double fb = psi(dir * b) * dir;
    if (fa > 0.0 && fb <= 0.0) {
      const double r = brent_root([&](double t) { return psi(dir * t) * dir; }, a, b, fa, fb, 1e-12);
      roots.push_back(dir * r);
    }
    a = b;
    fa = fb;
  }
  return roots;
}

constexpr double kFarAlpha = 16384.0;

FitResult one_param_mle(const Dataset& y, const ModelSpec& spec, const FitOptions& opts) {
  const Dataset z = standardized(y, spec);
  const double thr = opts.divergence_threshold;
  FitResult r;
  r.method = Method::MLE;
  Eigen::Index pos = 0, neg = 0;
  for (Eigen::Index i = 0; i < z.n(); ++i) {
    const double v = z.rows()(i, 0);
    pos += v > 0;
    neg += v < 0;
  }
  double alpha = 0.0;
  if (pos + neg == 0) {
    r.converged = true;
  } else if (pos == 0 || neg == 0) {
    r.diverged = true;
    r.divergence_rule = "same-sign sample: likelihood increases monotonically in alpha";
    alpha = pos > 0 ? thr : -thr;
    r.converged = true;
  } else {
    const double s0 = one_param_score(z, 0.0);
    if (s0 != 0.0) {
      const double dir = sgn(s0);
      const auto psi = [&](double t) { return one_param_score(z, dir * t) * dir; };
      double a = 0.0, fa = s0 * dir, b = 1.0, fb = psi(b);
      while (fb > 0.0 && b <= thr) {
        a = b;
        fa = fb;
        b *= 2.0;
        fb = psi(b);
      }
      if (fb > 0.0) {
        r.diverged = true;
        r.divergence_rule = "score positive beyond the divergence threshold";
        alpha = dir * thr;
      } else {
        alpha = dir * brent_root(psi, a, b, fa, fb, 1e-12);
        if (std::fabs(alpha) > thr) {
          r.diverged = true;
          r.divergence_rule = "|alpha| above the divergence threshold";
          alpha = dir * thr;
        }
      }
    }
    r.converged = true;
  }
  r.estimates = DirectParams::scalar(*spec.fixed_xi, *spec.fixed_omega, alpha);
  r.loglik_at_opt = loglik(r.estimates, y, spec);
  r.param_names = {"alpha"};
  if (opts.compute_stderr && !r.diverged) {
    const double h = -one_param_hessian(z, alpha);
    if (h > 0.0) {
      r.std_errors = Eigen::VectorXd::Constant(1, 1.0 / std::sqrt(h));
      r.obs_info = Eigen::MatrixXd::Constant(1, 1, h);
    } else {
      r.stderr_note = "observed information is not positive";
    }
  }
  return r;
}

FitResult one_param_mple(const Dataset& y, const ModelSpec& spec, const FitOptions& opts) {
  const Dataset z = standardized(y, spec);
  const PenaltyCoeffs c = spec.penalty_coeffs(std::nullopt);
  const double s0 = one_param_score(z, 0.0);
  double alpha = 0.0;
  if (s0 != 0.0) {
    const double dir = sgn(s0);
    const auto psi = [&](double a) { return one_param_score(z, a) - q_prime(c, a); };
    const auto roots = outward_maxima(psi, dir, kFarAlpha);
    if (roots.empty()) {
      std::ostringstream os;
      os << "penalized score has no root in [0, " << dir * kFarAlpha << "]";
      throw FitError(os.str());
    }
    double best = -kInf;
    for (double a : roots) {
      const double v = one_param_loglik(z, a) - q_value(c, a * a);
      if (v > best) {
        best = v;
        alpha = a;
      }
    }
  }
  FitResult r;
  r.method = Method::MPLE;
  r.estimates = DirectParams::scalar(*spec.fixed_xi, *spec.fixed_omega, alpha);
  r.loglik_at_opt = loglik(r.estimates, y, spec);
  r.penalized_loglik_at_opt = r.loglik_at_opt - q_value(c, alpha * alpha);
  r.converged = true;
  attach_stderr(r, y, spec, true, opts);
  return r;
}

// Re-optimizes everything except alpha, which is held at alpha_fixed.
OptimResult optimize_nuisance(const Dataset& data, const ModelSpec& spec, const DirectParams& start,
                              const Eigen::VectorXd& alpha_fixed, const FitOptions& opts) {
  const ParamCodec codec(spec);
  const int ai = codec.alpha_index();
  const int d = spec.dim;
  const Eigen::VectorXd full0 = codec.encode(start);
  const int m = codec.size() - d;
  auto expand = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd th(codec.size());
    th.head(ai) = u.head(ai);
    th.segment(ai, d) = alpha_fixed;
    th.tail(m - ai) = u.tail(m - ai);
    return th;
  };
  Eigen::VectorXd u0(m);
  u0.head(ai) = full0.head(ai);
  u0.tail(m - ai) = full0.tail(m - ai);
  const Objective f = [&](const Eigen::VectorXd& u) { return -loglik(codec.decode(expand(u)), data, spec); };
  OptimResult r = minimize(f, u0, opts.optim);
  r.x = expand(r.x);
  return r;
}

FitResult general_fit(const Dataset& data, const ModelSpec& spec, const FitOptions& opts, bool penalized) {
  const ParamCodec codec(spec);
  const Objective f = [&](const Eigen::VectorXd& th) {
    const DirectParams p = codec.decode(th);
    return -(penalized ? penalized_loglik(p, data, spec) : loglik(p, data, spec));
  };
  std::vector<std::string> labels;
  const auto starts = default_starts(data, spec, opts, labels);
  Search s;
  try {
    s = best_of_starts(f, codec, starts, labels, opts);
  } catch (const FitError&) {
    if (opts.multi_start) throw;
    labels = {"normal"};
    s = best_of_starts(f, codec, {normal_start(data, spec)}, labels, opts);
  }

  FitResult r;
  r.method = penalized ? Method::MPLE : Method::MLE;
  r.estimates = codec.decode(s.best.x);
  r.converged = s.best.converged;
  r.iterations = s.iterations;
  r.optimizer_trace = std::move(s.trace);

  if (!penalized && !spec.fixed_alpha) {
    const double thr = opts.divergence_threshold;
    const double amax = r.estimates.alpha.cwiseAbs().maxCoeff();
    Eigen::VectorXd dir = r.estimates.alpha;
    if (amax > thr) {
      r.diverged = true;
      r.divergence_rule = "|alpha| above the divergence threshold";
    }
    if (r.diverged) {
      const double dmax = dir.cwiseAbs().maxCoeff();
      Eigen::VectorXd afix = dmax > 0 ? Eigen::VectorXd(dir * (thr / dmax)) : Eigen::VectorXd(dir);
      Eigen::Index jmax = 0;
      dir.cwiseAbs().maxCoeff(&jmax);
      if (dmax > 0) afix[jmax] = sgn(dir[jmax]) * thr;
      DirectParams st = r.estimates;
      st.alpha = afix;
      OptimResult nr = optimize_nuisance(data, spec, st, afix, opts);
      if (spec.family == Family::SN && spec.dim == 1 && !spec.fixed_xi && !spec.fixed_omega) {
        DirectParams hs = boundary_start(data, afix[0]);
        hs.alpha = afix;
        const OptimResult alt = optimize_nuisance(data, spec, hs, afix, opts);
        if (alt.f < nr.f) nr = alt;
      }
      r.estimates = codec.decode(nr.x);
      r.estimates.alpha = afix;
      r.converged = nr.converged;
      r.iterations += nr.iterations;
    }
  }
  r.loglik_at_opt = loglik(r.estimates, data, spec);
  if (penalized) r.penalized_loglik_at_opt = penalized_loglik(r.estimates, data, spec);
  attach_stderr(r, data, spec, penalized, opts);
  return r;
}

}  // namespace

DirectParams moment_start(const Dataset& data, const ModelSpec& spec) {
  const int d = spec.dim;
  const Eigen::MatrixXd& x = data.rows();
  DirectParams p;
  p.xi.resize(d);
  p.alpha.resize(d);
  Eigen::VectorXd om(d);
  for (int j = 0; j < d; ++j) {
    const Eigen::ArrayXd c = x.col(j).array() - x.col(j).mean();
    const double m2 = c.square().mean();
    const double s = std::sqrt(m2);
    const double g = m2 > 0 ? c.cube().mean() / (m2 * s) : 0.0;
    double xi, omega, alpha;
    cp_to_dp(x.col(j).mean(), s > 0 ? s : 1.0, g, xi, omega, alpha);
    p.xi[j] = xi;
    om[j] = omega;
    p.alpha[j] = alpha;
  }
  if (d == 1) {
    p.omega_mat = Eigen::MatrixXd::Constant(1, 1, om[0] * om[0]);
  } else {
    const Eigen::MatrixXd cov = sample_cov(x);
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    const Eigen::MatrixXd corr = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
    p.omega_mat = om.asDiagonal() * corr * om.asDiagonal();
  }
  return apply_pins(p, spec);
}

DirectParams boundary_start(const Dataset& data, double sign) {
  const Eigen::ArrayXd y = data.rows().col(0).array();
  const double edge = sign >= 0 ? y.minCoeff() : y.maxCoeff();
  const double rms = std::sqrt((y - edge).square().mean());
  return DirectParams::scalar(edge - sign * 1e-3 * rms, rms, sign >= 0 ? 1.0 : -1.0);
}

FitResult fit_mle(const Dataset& data, const ModelSpec& spec, const FitOptions& opts) {
  check_fit_data(data, spec);
  if (!(opts.divergence_threshold > 0.0)) throw std::invalid_argument("divergence threshold must be positive");
  if (spec.is_one_parameter_sn()) return one_param_mle(data, spec, opts);
  return general_fit(data, spec, opts, false);
}

FitResult fit_mple(const Dataset& data, const ModelSpec& spec, const FitOptions& opts) {
  check_fit_data(data, spec);
  if (spec.is_one_parameter_sn()) return one_param_mple(data, spec, opts);
  return general_fit(data, spec, opts, true);
}

FitResult fit_sf_one_param(const Dataset& z, const FitOptions& opts) {
  const ModelSpec spec = ModelSpec::one_parameter();
  check_fit_data(z, spec);
  const double s0 = one_param_score(z, 0.0);
  double alpha = 0.0;
  if (s0 != 0.0) {
    const double dir = sgn(s0);
    const auto psi = [&](double a) { return one_param_score(z, a) + sn_m_exact(a); };
    const auto roots = outward_maxima(psi, dir, kFarAlpha);
    if (roots.empty()) {
      std::ostringstream os;
      os << "modified score has no root in [0, " << dir * kFarAlpha << "]";
      throw FitError(os.str());
    }
    alpha = roots.front();
    if (roots.size() > 1) {
      // l(a) + int_0^a M is the objective whose derivative is the modified score
      double best = -kInf;
      for (double a : roots) {
        const double v = one_param_loglik(z, a) + integrate([](double t) { return sn_m_exact(t); }, 0.0, a).value;
        if (v > best) {
          best = v;
          alpha = a;
        }
      }
    }
  }
  FitResult r;
  r.method = Method::SF;
  r.estimates = DirectParams::scalar(0.0, 1.0, alpha);
  r.loglik_at_opt = loglik(r.estimates, z, spec);
  r.converged = true;
  r.param_names = {"alpha"};
  if (opts.compute_stderr) {
    const double h = 1e-5 * std::max(1.0, std::fabs(alpha));
    const double dm = (sn_m_exact(alpha + h) - sn_m_exact(alpha - h)) / (2 * h);
    const double info = -one_param_hessian(z, alpha) - dm;
    if (info > 0.0) {
      r.std_errors = Eigen::VectorXd::Constant(1, 1.0 / std::sqrt(info));
      r.obs_info = Eigen::MatrixXd::Constant(1, 1, info);
    } else {
      r.stderr_note = "modified information is not positive";
    }
  }
  return r;
}

double st_m_exact(double alpha, double nu) {
  detail::require_finite(alpha, "st_m_exact");
  detail::require_positive_nu(nu);
  if (alpha == 0.0) return 0.0;
  const double a2 = alpha * alpha;
  const double delta = alpha / std::sqrt(1.0 + a2);
  const double inv1pa2 = 1.0 / (1.0 + a2);
  const double nu1 = nu + 1.0;
  auto v_of = [&](double x) { return std::sqrt(nu1 / (nu1 + x * x * inv1pa2)); };
  AdaptiveOptions ao;
  ao.abs_tol = 1e-11;
  const double D = expect_t(
      [&](double x) {
        const double v = v_of(x);
        return x * x * v * zeta1_t(delta * x * v, nu1);
      },
      nu1, ao);
  const double N = expect_t(
      [&](double x) {
        const double v = v_of(x);
        return x * x * x * x * v * zeta1_t(delta * x * v, nu1) * nu1 / (nu1 + x * x);
      },
      nu1, ao);
  return -0.5 * alpha * (nu1 / (nu + 2.0)) * N / ((1.0 + a2) * D);
}

Eigen::VectorXd stderr_from_penalized_info(const FitResult& fit, const Dataset& data, const ModelSpec& spec) {
  if (fit.diverged) throw FitError("standard errors requested for a diverged fit");
  if (!fit.converged) throw FitError("standard errors requested for a non-converged fit");
  return info_and_se(fit.estimates, data, spec, true).se;
}

}  // namespace skewpen
