#include "skewpen/penalty.hpp"

#include <cmath>
#include <future>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "skewpen/distributions.hpp"
#include "skewpen/quadrature.hpp"
#include "skewpen/specfun.hpp"

namespace skewpen {

PenaltyCoeffs PenaltyCoeffs::custom(double c1, double c2) {
  PenaltyCoeffs c;
  c.c1 = c1;
  c.c2 = c2;
  c.provenance = Provenance::custom;
  c.validate();
  return c;
}

void PenaltyCoeffs::validate() const {
  if (!(c1 >= 0.0) || !std::isfinite(c1)) throw std::invalid_argument("penalty c1 must be finite and >= 0");
  if (!(c2 > 0.0) || !std::isfinite(c2)) throw std::invalid_argument("penalty c2 must be finite and > 0");
  if (c1 == 0.0 && provenance != Provenance::custom)
    throw std::invalid_argument("penalty c1 must be positive");
}

std::string PenaltyCoeffs::describe() const {
  std::ostringstream os;
  os << provenance_name(provenance);
  if (nu) os << "(nu=" << *nu << ")";
  return os.str();
}

const char* provenance_name(PenaltyCoeffs::Provenance p) {
  switch (p) {
    case PenaltyCoeffs::Provenance::sn_exact: return "SN_EXACT";
    case PenaltyCoeffs::Provenance::st_exact: return "ST_EXACT";
    case PenaltyCoeffs::Provenance::st_approx: return "ST_APPROX";
    case PenaltyCoeffs::Provenance::custom: return "CUSTOM";
  }
  return "?";
}

double q_value(const PenaltyCoeffs& c, double alpha_star_sq) {
  if (!(alpha_star_sq >= 0.0)) throw std::invalid_argument("q_value: alpha*^2 must be >= 0");
  return c.c1 * std::log1p(c.c2 * alpha_star_sq);
}

double q_prime(const PenaltyCoeffs& c, double alpha) {
  return 2.0 * c.c1 * c.c2 * alpha / (1.0 + c.c2 * alpha * alpha);
}

namespace {

PenaltyCoeffs from_e(const ECoeffs& e, PenaltyCoeffs::Provenance prov, std::optional<double> nu) {
  PenaltyCoeffs c;
  c.c1 = 1.0 / (4.0 * e.e2);
  c.c2 = e.e2 / e.e1;
  c.provenance = prov;
  c.nu = nu;
  c.validate();
  return c;
}

NormalQuadratureOptions tight_normal() {
  NormalQuadratureOptions o;
  o.abs_tol = 1e-13;
  return o;
}

ECoeffs compute_st_exact(double nu) {
  const double g = st_g(nu);
  const double nu1 = nu + 1.0;
  const double scale = std::sqrt(nu1 / (nu + 3.0));
  AdaptiveOptions o;
  o.abs_tol = 1e-10;
  const double num = expect_t([&](double x) { return x * x * zeta1_t(x, nu1); }, nu1, o);
  const double den = expect_t([&](double x) { return x * x * x * x * zeta1_t(x * scale, nu1); }, nu + 3.0, o);
  return {g / 3.0, g * g * num / den};
}

}  // namespace

ECoeffs sn_e_coeffs() {
  static const ECoeffs e = [] {
    const auto o = tight_normal();
    const double num = expect_normal([](double x) { return x * x * zeta1(x); }, o);
    const double den = expect_normal([](double x) { return x * x * x * x * zeta1(x); }, o);
    return ECoeffs{1.0 / 3.0, num / den};
  }();
  return e;
}

PenaltyCoeffs sn_coeffs() { return from_e(sn_e_coeffs(), PenaltyCoeffs::Provenance::sn_exact, std::nullopt); }

double st_g(double nu) {
  detail::require_positive_nu(nu);
  return (nu + 2.0) * (nu + 3.0) / ((nu + 1.0) * (nu + 1.0));
}

double st_e1_closed_form(double nu) {
  detail::require_positive_nu(nu);
  const double b1 = 2.0 * t_pdf(0.0, nu + 1.0);
  const double b3 = 2.0 * t_pdf(0.0, nu + 3.0);
  const double r = (nu + 2.0) / (nu + 1.0);
  return (b1 / b3) * (b1 / b3) * r * r * r / 3.0;
}

ECoeffs st_e_coeffs_exact(double nu) {
  detail::require_positive_nu(nu);
  static std::mutex mu;
  static std::map<double, std::shared_future<ECoeffs>> cache;
  std::shared_future<ECoeffs> fut;
  std::promise<ECoeffs> prom;
  bool owner = false;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(nu);
    if (it == cache.end()) {
      fut = prom.get_future().share();
      cache.emplace(nu, fut);
      owner = true;
    } else {
      fut = it->second;
    }
  }
  if (owner) {
    try {
      prom.set_value(compute_st_exact(nu));
    } catch (...) {
      {
        std::lock_guard<std::mutex> lock(mu);
        cache.erase(nu);
      }
      prom.set_exception(std::current_exception());
    }
  }
  return fut.get();
}

double st_e2_approx(double nu) {
  detail::require_positive_nu(nu);
  return sn_e_coeffs().e2 * (1.0 + 4.0 / (nu + kEulerGamma));
}

const char* st_mode_name(StMode m) { return m == StMode::exact ? "exact" : "approx"; }

PenaltyCoeffs st_coeffs(double nu, StMode mode) {
  detail::require_positive_nu(nu);
  if (mode == StMode::exact) return from_e(st_e_coeffs_exact(nu), PenaltyCoeffs::Provenance::st_exact, nu);
  const ECoeffs e{st_g(nu) / 3.0, st_e2_approx(nu)};
  return from_e(e, PenaltyCoeffs::Provenance::st_approx, nu);
}

double mbb_m(double alpha) {
  detail::require_finite(alpha, "mbb_m");
  return -1.5 * alpha / (1.0 + 8.0 * alpha * alpha / (M_PI * M_PI));
}

PenaltyCoeffs mbb_coeffs() { return PenaltyCoeffs::custom(3.0 * M_PI * M_PI / 32.0, 8.0 / (M_PI * M_PI)); }

double sn_a(int p, double alpha) {
  detail::require_finite(alpha, "sn_a");
  const double delta = delta_of_alpha(alpha);
  const double e = standard_normal_rule().apply_fast([&](double x) { return std::pow(x, p) * zeta1(delta * x); });
  return kSqrt2OverPi * std::pow(1.0 + alpha * alpha, -0.5 * (p + 1)) * e;
}

double sn_m_exact(double alpha) {
  detail::require_finite(alpha, "sn_m_exact");
  if (alpha == 0.0) return 0.0;
  const double delta = delta_of_alpha(alpha);
  const auto& rule = standard_normal_rule();
  const double e2 = rule.apply_fast([&](double x) { return x * x * zeta1(delta * x); });
  const double e4 = rule.apply_fast([&](double x) { return x * x * x * x * zeta1(delta * x); });
  return -0.5 * alpha * e4 / ((1.0 + alpha * alpha) * e2);
}

std::vector<double> line_fit_grid() {
  std::vector<double> g(25);
  const double lo = std::log(0.25), hi = std::log(250.0);
  for (int i = 0; i < 25; ++i) g[i] = std::exp(lo + (hi - lo) * i / 24.0);
  g.front() = 0.25;
  g.back() = 250.0;
  return g;
}

LineFit line_fit_check() {
  LineFit f;
  f.nu_grid = line_fit_grid();
  const double e2 = sn_e_coeffs().e2;
  const std::size_t m = f.nu_grid.size();
  std::vector<double> xs(m), ys(m);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double nu = f.nu_grid[i];
    const double e2nu = st_e_coeffs_exact(nu).e2;
    f.e2_exact.push_back(e2nu);
    xs[i] = std::log(nu + kEulerGamma);
    ys[i] = std::log(e2nu / e2 - 1.0);
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < m; ++i) {
    f.max_abs_residual = std::max(f.max_abs_residual, std::fabs(ys[i] - f.intercept - f.slope * xs[i]));
  }
  return f;
}

}  // namespace skewpen
