#include "skewpen/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace skewpen {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double safe_eval(const Objective& f, const Eigen::VectorXd& x) {
  try {
    const double v = f(x);
    return std::isnan(v) ? kInf : v;
  } catch (const std::exception&) {
    return kInf;
  }
}

OptimResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const OptimOptions& opts) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1][i] += opts.nm_step * std::max(1.0, std::fabs(x0[i])) ;
  OptimResult res;
  for (int i = 0; i <= n; ++i) fv[i] = safe_eval(f, pts[i]);
  res.evaluations = n + 1;

  std::vector<int> order(n + 1);
  int it = 0;
  for (; it < opts.nm_max_iter; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = order[0], worst = order[n], second = order[n - 1];
    const double spread = std::fabs(fv[worst] - fv[best]);
    if (std::isfinite(fv[worst]) && spread <= opts.nm_ftol * (std::fabs(fv[best]) + 1e-10)) {
      double size = 0.0;
      for (int i = 0; i <= n; ++i) size = std::max(size, (pts[i] - pts[best]).cwiseAbs().maxCoeff());
      if (size < 1e-7) {
        res.converged = true;
        break;
      }
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += pts[i];
    centroid /= n;

    const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = safe_eval(f, xr);
    ++res.evaluations;
    if (fr < fv[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = safe_eval(f, xe);
      ++res.evaluations;
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      pts[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                       : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = safe_eval(f, xc);
    ++res.evaluations;
    if (fc < (outside ? fr : fv[worst])) {
      pts[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (int i = 0; i <= n; ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      fv[i] = safe_eval(f, pts[i]);
      ++res.evaluations;
    }
  }
  const int best = static_cast<int>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  res.x = pts[best];
  res.f = fv[best];
  res.iterations = it;
  return res;
}

Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::fabs(x[i]));
    xp[i] = x[i] + h;
    const double fp = safe_eval(f, xp);
    xp[i] = x[i] - h;
    const double fm = safe_eval(f, xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& x, double rel_step) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd H(n, n);
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i) h[i] = rel_step * std::max(1.0, std::fabs(x[i]));
  const double f0 = safe_eval(f, x);
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    xp[i] = x[i] + h[i];
    const double fp = safe_eval(f, xp);
    xp[i] = x[i] - h[i];
    const double fm = safe_eval(f, xp);
    xp[i] = x[i];
    H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      double s = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          xp[i] = x[i] + si * h[i];
          xp[j] = x[j] + sj * h[j];
          s += si * sj * safe_eval(f, xp);
        }
      }
      xp[i] = x[i];
      xp[j] = x[j];
      H(i, j) = H(j, i) = s / (4.0 * h[i] * h[j]);
    }
  }
  return H;
}

OptimResult bfgs(const Objective& f, const Eigen::VectorXd& x0, const OptimOptions& opts) {
  const Eigen::Index n = x0.size();
  OptimResult res;
  Eigen::VectorXd x = x0;
  double fx = safe_eval(f, x);
  ++res.evaluations;
  if (!std::isfinite(fx)) {
    res.x = x;
    res.f = fx;
    return res;
  }
  Eigen::VectorXd g = numerical_gradient(f, x);
  res.evaluations += 2 * static_cast<int>(n);
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
  int it = 0;
  for (; it < opts.bfgs_max_iter; ++it) {
    if (g.cwiseAbs().maxCoeff() <= opts.gtol * (1.0 + std::fabs(fx))) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd p = -Hinv * g;
    if (g.dot(p) >= 0.0) {
      Hinv.setIdentity();
      p = -g;
    }
    double step = 1.0;
    double fn = kInf;
    Eigen::VectorXd xn;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + step * p;
      fn = safe_eval(f, xn);
      ++res.evaluations;
      if (std::isfinite(fn) && fn <= fx + 1e-4 * step * g.dot(p)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // no descent possible along p at numerical-gradient accuracy
      res.converged = g.cwiseAbs().maxCoeff() <= 1e3 * opts.gtol * (1.0 + std::fabs(fx));
      break;
    }
    const Eigen::VectorXd gn = numerical_gradient(f, xn);
    res.evaluations += 2 * static_cast<int>(n);
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    const double df = fx - fn;
    x = xn;
    g = gn;
    fx = fn;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    if (df >= 0.0 && df <= opts.ftol * (1.0 + std::fabs(fx)) && s.cwiseAbs().maxCoeff() < 1e-10) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.f = fx;
  res.iterations = it;
  return res;
}

OptimResult minimize(const Objective& f, const Eigen::VectorXd& x0, const OptimOptions& opts) {
  OptimResult nm = nelder_mead(f, x0, opts);
  OptimResult qn = bfgs(f, nm.x, opts);
  qn.iterations += nm.iterations;
  qn.evaluations += nm.evaluations;
  if (nm.f < qn.f) {
    nm.iterations = qn.iterations;
    nm.evaluations = qn.evaluations;
    nm.converged = nm.converged && qn.converged;
    return nm;
  }
  return qn;
}

double brent_root(const ScalarFn& f, double a, double b, double xtol, int max_iter) {
  return brent_root(f, a, b, f(a), f(b), xtol, max_iter);
}

double brent_root(const ScalarFn& f, double a, double b, double fa, double fb, double xtol, int max_iter) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) throw std::runtime_error("brent_root: root not bracketed");
  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::fabs(b) + 0.5 * xtol;
    const double m = 0.5 * (c - b);
    if (std::fabs(m) <= tol || fb == 0.0) return b;
    if (std::fabs(e) >= tol && std::fabs(fa) > std::fabs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      else p = -p;
      if (2.0 * p < std::min(3.0 * m * q - std::fabs(tol * q), std::fabs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += std::fabs(d) > tol ? d : (m > 0 ? tol : -tol);
    fb = f(b);
  }
  return b;
}

}  // namespace skewpen
