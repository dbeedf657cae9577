#include "skewpen/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "skewpen/specfun.hpp"

namespace skewpen {

namespace {

constexpr double kSMax = 700.0;  // e^700 is still a finite double

struct GaussLegendrePair {
  std::vector<double> x10, w10, x20, w20;
};

const GaussLegendrePair& gl_pair() {
  static const GaussLegendrePair pair = [] {
    GaussLegendrePair p;
    gauss_legendre(10, p.x10, p.w10);
    gauss_legendre(20, p.x20, p.w20);
    return p;
  }();
  return pair;
}

struct PanelValue {
  double coarse = 0.0;
  double fine = 0.0;
};

template <class F>
PanelValue gl_panel(F&& f, double a, double b) {
  const auto& gl = gl_pair();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  PanelValue v;
  for (std::size_t i = 0; i < gl.x10.size(); ++i) v.coarse += gl.w10[i] * f(mid + half * gl.x10[i]);
  for (std::size_t i = 0; i < gl.x20.size(); ++i) v.fine += gl.w20[i] * f(mid + half * gl.x20[i]);
  v.coarse *= half;
  v.fine *= half;
  return v;
}

// Adaptive panel integration of h on [a, b]; on acceptance the fine rule's
// nodes are optionally recorded through `record`.
template <class F, class Rec>
double adaptive_panel(F&& h, double a, double b, double tol, int depth, int max_depth,
                      double& err, std::size_t& evals, Rec&& record) {
  const PanelValue v = gl_panel(h, a, b);
  evals += 30;
  const double e = std::fabs(v.fine - v.coarse);
  if (e <= tol || depth >= max_depth || !std::isfinite(v.fine)) {
    err += e;
    record(a, b);
    return v.fine;
  }
  const double m = 0.5 * (a + b);
  return adaptive_panel(h, a, m, 0.5 * tol, depth + 1, max_depth, err, evals, record) +
         adaptive_panel(h, m, b, 0.5 * tol, depth + 1, max_depth, err, evals, record);
}

}  // namespace

void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    long double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    long double pp = 0.0L;
    for (int it = 0; it < 100; ++it) {
      long double p1 = 1.0L, p2 = 0.0L;
      for (std::size_t j = 1; j <= n; ++j) {
        const long double p3 = p2;
        p2 = p1;
        p1 = ((2.0L * j - 1.0L) * z * p2 - (j - 1.0L) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0L);
      const long double dz = p1 / pp;
      z -= dz;
      if (std::fabs(static_cast<double>(dz)) < 1e-19) break;
    }
    nodes[i] = -static_cast<double>(z);
    nodes[n - 1 - i] = static_cast<double>(z);
    const double w = static_cast<double>(2.0L / ((1.0L - z * z) * pp * pp));
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

double QuadratureRule::apply(const RealFn& f) const {
  return apply_fast([&](double x) { return f(x); });
}

QuadratureRule gauss_hermite_rule(std::size_t n) {
  if (n < 2) throw std::invalid_argument("gauss_hermite_rule: need at least two nodes");
  // Golub-Welsch for starting values, then Newton on the orthonormal
  // recurrence; weights from the Christoffel function keep full relative
  // accuracy in the tails.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(n - 1));
  for (std::size_t k = 1; k < n; ++k) sub[static_cast<Eigen::Index>(k - 1)] = std::sqrt(double(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);

  QuadratureRule rule;
  rule.kind = QuadratureRule::Kind::gauss_hermite;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    long double x = eig.eigenvalues()[static_cast<Eigen::Index>(i)];
    long double sumsq = 0.0L;
    for (int it = 0; it < 6; ++it) {
      long double p0 = 1.0L, p1 = x;
      sumsq = 1.0L + x * x;
      for (std::size_t k = 1; k + 1 < n; ++k) {
        const long double p2 = (x * p1 - std::sqrt((long double)k) * p0) / std::sqrt((long double)(k + 1));
        p0 = p1;
        p1 = p2;
        sumsq += p1 * p1;
      }
      // p1 = p_{n-1}, p0 = p_{n-2}
      const long double pn = (x * p1 - std::sqrt((long double)(n - 1)) * p0) / std::sqrt((long double)n);
      const long double dpn = std::sqrt((long double)n) * p1;
      const long double dx = pn / dpn;
      x -= dx;
      if (std::fabs(static_cast<double>(dx)) < 1e-18 * (1.0 + std::fabs(static_cast<double>(x)))) {
        // one more pass refreshes sumsq at the converged node
        if (it > 0) break;
      }
    }
    rule.nodes[i] = static_cast<double>(x);
    rule.weights[i] = static_cast<double>(1.0L / sumsq);
  }
  // Symmetrize to remove rounding asymmetry.
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

const QuadratureRule& standard_normal_rule() {
  static const QuadratureRule rule = gauss_hermite_rule(64);
  return rule;
}

double expect_normal(const RealFn& f, const NormalQuadratureOptions& opts) {
  const auto& base = opts.nodes == 64 ? standard_normal_rule() : gauss_hermite_rule(opts.nodes);
  double value = base.apply(f);
  if (!opts.verify) return value;
  double diff = 0.0;
  for (std::size_t n = 2 * opts.nodes; n <= opts.max_nodes; n *= 2) {
    const double refined = gauss_hermite_rule(n).apply(f);
    diff = std::fabs(refined - value);
    value = refined;
    if (diff <= opts.abs_tol) return value;
  }
  throw QuadratureError("expect_normal: Gauss-Hermite refinement did not converge", diff);
}

RealLineResult integrate_real_line(const RealFn& g, const AdaptiveOptions& opts) {
  RealLineResult out;
  out.rule.kind = QuadratureRule::Kind::adaptive_interval;
  const auto& gl = gl_pair();

  // Core [-1, 1] directly in x; the two tails through x = +-e^s, s >= 0.
  auto h = [&](double s) {
    const double x = std::exp(s);
    return (g(x) + g(-x)) * x;
  };
  auto record_core = [&](double a, double b) {
    if (!opts.keep_rule) return;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < gl.x20.size(); ++i) {
      out.rule.nodes.push_back(mid + half * gl.x20[i]);
      out.rule.weights.push_back(gl.w20[i] * half);
    }
  };
  auto record_tail = [&](double a, double b) {
    if (!opts.keep_rule) return;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < gl.x20.size(); ++i) {
      const double x = std::exp(mid + half * gl.x20[i]);
      const double w = gl.w20[i] * half * x;
      out.rule.nodes.push_back(x);
      out.rule.weights.push_back(w);
      out.rule.nodes.push_back(-x);
      out.rule.weights.push_back(w);
    }
  };

  double err = 0.0;
  double total = adaptive_panel(g, -1.0, 1.0, opts.abs_tol / 16.0, 0, opts.max_bisections, err, out.evaluations,
                                record_core);
  const double w = opts.panel_width;
  double max_seen = std::fabs(total);
  double prev = 0.0;
  int quiet = 0;
  for (int k = 0;; ++k) {
    const double a = k * w;
    const double b = a + w;
    if (a > kSMax) {
      err += std::fabs(prev);
      break;
    }
    const double tol = std::max(opts.abs_tol, opts.rel_tol * std::fabs(total)) / 64.0;
    const double p = adaptive_panel(h, a, b, tol, 0, opts.max_bisections, err, out.evaluations, record_tail);
    total += p;
    max_seen = std::max(max_seen, std::fabs(p));
    const double stop_tol = 1e-3 * std::max(opts.abs_tol, opts.rel_tol * std::fabs(total));
    if (max_seen > 0.0 && std::fabs(p) <= stop_tol) {
      if (++quiet >= 4) {
        const double r = prev != 0.0 ? std::fabs(p / prev) : 0.0;
        if (r < 1.0) err += std::fabs(p) * r / (1.0 - r);
        else err += std::fabs(p) * 1e3;
        break;
      }
    } else {
      quiet = 0;
    }
    prev = p;
  }
  out.value = total;
  out.error = err;
  return out;
}

QuadResult integrate_t(const RealFn& f, double nu, const AdaptiveOptions& opts) {
  detail::require_positive_nu(nu);
  const double lognorm = boost::math::lgamma(0.5 * (nu + 1.0)) - boost::math::lgamma(0.5 * nu) -
                         0.5 * std::log(nu * M_PI);
  auto g = [&](double x) {
    const double q = x * x / nu;
    const double logk = std::isfinite(q) ? std::log1p(q) : 2.0 * std::log(std::fabs(x)) - std::log(nu);
    const double pdf = std::exp(lognorm - 0.5 * (nu + 1.0) * logk);
    if (pdf == 0.0) return 0.0;
    return f(x) * pdf;
  };
  AdaptiveOptions o = opts;
  o.keep_rule = false;
  const RealLineResult r = integrate_real_line(g, o);
  return {r.value, r.error, r.evaluations};
}

double expect_t(const RealFn& f, double nu, const AdaptiveOptions& opts) {
  const QuadResult r = integrate_t(f, nu, opts);
  if (!std::isfinite(r.value)) throw QuadratureError("expect_t: non-finite integral", r.error);
  if (r.error > opts.abs_tol) throw QuadratureError("expect_t: adaptive refinement did not converge", r.error);
  return r.value;
}

QuadResult integrate(const RealFn& f, double a, double b, double abs_tol, int max_bisections) {
  QuadResult out;
  if (!(a < b)) {
    if (a == b) return out;
    QuadResult r = integrate(f, b, a, abs_tol, max_bisections);
    r.value = -r.value;
    return r;
  }
  out.value = adaptive_panel(f, a, b, abs_tol, 0, max_bisections, out.error, out.evaluations,
                             [](double, double) {});
  return out;
}

}  // namespace skewpen
