#pragma once

// W and W_p statistics and the estimator defined by W = W_p on the segment
// joining the MLE and the MPLE.

#include <cstdint>
#include <string>
#include <vector>

#include "skewpen/estimators.hpp"

namespace skewpen {

struct WStats {
  double W = 0.0;
  double Wp = 0.0;
};

struct WbarDiagnostics {
  double q_of_y = 0.0;
  double r_of_y = 0.0;
  double segment_parameter = 0.0;  // t with theta_t = mle + t (mple - mle)
  struct SignChecks {
    double w_at_mple = 0.0;          // > 0
    double wp_at_mle = 0.0;          // > 0
    double g_at_mple = 0.0;          // Wp - W at the MPLE, < 0
    double g_at_mle = 0.0;           // Wp - W at the MLE, > 0
    bool hold() const { return w_at_mple > 0 && wp_at_mle > 0 && g_at_mple < 0 && g_at_mle > 0; }
  } sign_checks;
  int roots_detected = 0;  // sign changes of Wp - W on the scan grid
};

struct WbarFit {
  FitResult fit;
  WbarDiagnostics diagnostics;
};

/// W = 2{l(mle) - l(theta)}, Wp = 2{l_p(mple) - l_p(theta)}.
WStats w_statistics(const DirectParams& theta, const Dataset& data, const ModelSpec& spec, const FitResult& mle,
                    const FitResult& mple);

/// Wp - W along the segment: 2{Q(theta_t) - q(y)}.
double wbar_gap(double t, const Dataset& data, const ModelSpec& spec, const FitResult& mle, const FitResult& mple);

/// Root of Wp - W on the segment; the root nearest the MPLE when several.
/// Throws FitError if the MLE diverged or the bracket does not hold.
WbarFit fit_wbar(const Dataset& data, const ModelSpec& spec, const FitResult& mle, const FitResult& mple);

struct WScatterRow {
  std::size_t replicate = 0;
  double W = 0.0;
  double Wp = 0.0;
  std::string branch;  // both-over, both-under, mixed
  double alpha_mle = 0.0;
  double alpha_mple = 0.0;
};

/// (W, Wp) at the true alpha for one-parameter SN samples; diverged-MLE
/// replicates are dropped.
std::vector<WScatterRow> emit_w_scatter(std::size_t n_reps, std::size_t n, double alpha_true, std::uint64_t seed,
                                        unsigned threads = 1);

}  // namespace skewpen
