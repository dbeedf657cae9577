#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace skewpen {

using RealFn = std::function<double(double)>;

/// Nodes and weights of a quadrature rule against a reference measure.
/// For `gauss_hermite` the measure is N(0,1) and weights sum to one; for
/// `adaptive_interval` the weights already include density and Jacobian, as
/// realised by an adaptive integration of one particular integrand.
struct QuadratureRule {
  enum class Kind { gauss_hermite, adaptive_interval };

  Kind kind = Kind::gauss_hermite;
  std::vector<double> nodes;
  std::vector<double> weights;

  double apply(const RealFn& f) const;
  template <class F>
  double apply_fast(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
  std::size_t size() const { return nodes.size(); }
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved_error)
      : std::runtime_error(what + " (achieved error estimate " + std::to_string(achieved_error) + ")"),
        achieved_error_(achieved_error) {}
  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
};

/// Probabilists' Gauss-Hermite rule with `n` nodes (weights sum to one).
QuadratureRule gauss_hermite_rule(std::size_t n);

/// The 64-node rule used for every N(0,1) expectation; built once.
const QuadratureRule& standard_normal_rule();

struct NormalQuadratureOptions {
  std::size_t nodes = 64;
  double abs_tol = 1e-9;
  /// Compare against rules of doubled size until two agree within abs_tol.
  bool verify = true;
  std::size_t max_nodes = 512;
};

/// E f(X), X ~ N(0,1).
double expect_normal(const RealFn& f, const NormalQuadratureOptions& opts = {});

struct AdaptiveOptions {
  double abs_tol = 1e-7;
  double rel_tol = 1e-10;
  /// Panel width in the log-radial variable s (x = +-e^s).
  double panel_width = 0.5;
  int max_bisections = 12;
  /// Keep the realised nodes/weights (see integrate_real_line).
  bool keep_rule = false;
};

struct RealLineResult : QuadResult {
  QuadratureRule rule;
};

/// Integral of g over the real line. Adaptive Gauss-Legendre on [-1, 1],
/// then panels in s (x = +-e^s) marched outward until the contributions die
/// out, so both Gaussian and algebraic tails are handled.
RealLineResult integrate_real_line(const RealFn& g, const AdaptiveOptions& opts = {});

/// E f(X), X ~ t_nu. Throws QuadratureError if the achieved error estimate
/// exceeds opts.abs_tol.
double expect_t(const RealFn& f, double nu, const AdaptiveOptions& opts = {});
QuadResult integrate_t(const RealFn& f, double nu, const AdaptiveOptions& opts = {});

/// Adaptive Gauss-Legendre (10/20 point pair) on a finite interval.
QuadResult integrate(const RealFn& f, double a, double b, double abs_tol = 1e-10,
                     int max_bisections = 30);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace skewpen
