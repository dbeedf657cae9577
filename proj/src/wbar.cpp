#include "skewpen/wbar.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "skewpen/parallel.hpp"

namespace skewpen {

namespace {

void require_usable(const FitResult& mle, const FitResult& mple) {
  if (mle.method != Method::MLE || mple.method != Method::MPLE) throw FitError("fit_wbar expects an MLE and an MPLE");
  if (mle.diverged) throw FitError("W-bar estimate undefined: the MLE diverged");
  if (!mple.penalized_loglik_at_opt) throw FitError("MPLE fit lacks the penalized log-likelihood");
}

DirectParams on_segment(double t, const DirectParams& a, const DirectParams& b) {
  DirectParams p;
  p.xi = a.xi + t * (b.xi - a.xi);
  p.omega_mat = a.omega_mat + t * (b.omega_mat - a.omega_mat);
  p.alpha = a.alpha + t * (b.alpha - a.alpha);
  if (a.nu && b.nu) p.nu = *a.nu + t * (*b.nu - *a.nu);
  return p;
}

}  // namespace

WStats w_statistics(const DirectParams& theta, const Dataset& data, const ModelSpec& spec, const FitResult& mle,
                    const FitResult& mple) {
  require_usable(mle, mple);
  const double l = loglik(theta, data, spec);
  const double lp = l - penalty_at(theta, spec);
  return {2.0 * (mle.loglik_at_opt - l), 2.0 * (*mple.penalized_loglik_at_opt - lp)};
}

double wbar_gap(double t, const Dataset& data, const ModelSpec& spec, const FitResult& mle, const FitResult& mple) {
  const auto w = w_statistics(on_segment(t, mle.estimates, mple.estimates), data, spec, mle, mple);
  return w.Wp - w.W;
}

WbarFit fit_wbar(const Dataset& data, const ModelSpec& spec, const FitResult& mle, const FitResult& mple) {
  require_usable(mle, mple);
  if (!mle.converged || !mple.converged) throw FitError("fit_wbar needs converged MLE and MPLE fits");
  WbarDiagnostics dg;
  const auto at_mle = w_statistics(mle.estimates, data, spec, mle, mple);
  const auto at_mple = w_statistics(mple.estimates, data, spec, mle, mple);
  dg.sign_checks.w_at_mple = at_mple.W;
  dg.sign_checks.wp_at_mle = at_mle.Wp;
  dg.sign_checks.g_at_mle = at_mle.Wp - at_mle.W;
  dg.sign_checks.g_at_mple = at_mple.Wp - at_mple.W;
  const PenaltyCoeffs c = spec.penalty_coeffs(mple.estimates.nu);
  dg.q_of_y = mle.loglik_at_opt - mple.loglik_at_opt + penalty_at(mple.estimates, spec);
  dg.r_of_y = c.c1 > 0.0 ? std::expm1(dg.q_of_y / c.c1) / c.c2 : 0.0;

  const double g0 = dg.sign_checks.g_at_mle, g1 = dg.sign_checks.g_at_mple;
  if (!(g0 > 0.0 && g1 < 0.0)) {
    std::ostringstream os;
    os << "Wp - W does not change sign on the segment (g(0) = " << g0 << ", g(1) = " << g1 << ")";
    throw FitError(os.str());
  }
  const auto g = [&](double t) { return wbar_gap(t, data, spec, mle, mple); };

  constexpr int kScan = 64;
  std::vector<double> gv(kScan + 1);
  gv[0] = g0;
  gv[kScan] = g1;
  for (int i = 1; i < kScan; ++i) gv[i] = g(static_cast<double>(i) / kScan);
  int changes = 0;
  std::optional<int> last;
  for (int i = 0; i < kScan; ++i) {
    if ((gv[i] > 0) != (gv[i + 1] > 0)) {
      ++changes;
      last = i;
    }
  }
  dg.roots_detected = changes;
  // the bracket guarantees at least one change; take the one nearest t = 1
  double lo = static_cast<double>(*last) / kScan, hi = static_cast<double>(*last + 1) / kScan;
  double glo = gv[*last], ghi = gv[*last + 1];
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
      ghi = gm;
    }
  }
  double t = 0.5 * (lo + hi);
  if (ghi != glo) {
    const double ts = lo - glo * (hi - lo) / (ghi - glo);
    if (ts >= lo && ts <= hi && std::fabs(g(ts)) <= std::fabs(g(t))) t = ts;
  }
  dg.segment_parameter = t;

  WbarFit out;
  out.fit.method = Method::WBAR;
  out.fit.estimates = on_segment(t, mle.estimates, mple.estimates);
  out.fit.loglik_at_opt = loglik(out.fit.estimates, data, spec);
  out.fit.penalized_loglik_at_opt = out.fit.loglik_at_opt - penalty_at(out.fit.estimates, spec);
  out.fit.converged = true;
  out.fit.param_names = ParamCodec(spec).direct_names();
  out.diagnostics = dg;
  return out;
}

std::vector<WScatterRow> emit_w_scatter(std::size_t n_reps, std::size_t n, double alpha_true, std::uint64_t seed,
                                        unsigned threads) {
  if (n_reps == 0 || n == 0) throw std::invalid_argument("emit_w_scatter: replicates and n must be positive");
  const ModelSpec spec = ModelSpec::one_parameter();
  const DirectParams truth = DirectParams::scalar(0.0, 1.0, alpha_true);
  FitOptions fo;
  fo.compute_stderr = false;
  std::vector<std::optional<WScatterRow>> slots(n_reps);
  parallel_for(n_reps, threads, [&](std::size_t i) {
    const Dataset z = sample(truth, n, replicate_seed(seed, n, i));
    const FitResult mle = fit_mle(z, spec, fo);
    if (mle.diverged) return;
    const FitResult mple = fit_mple(z, spec, fo);
    const auto w = w_statistics(truth, z, spec, mle, mple);
    WScatterRow row;
    row.replicate = i;
    row.W = w.W;
    row.Wp = w.Wp;
    row.alpha_mle = mle.estimates.alpha[0];
    row.alpha_mple = mple.estimates.alpha[0];
    const bool over_mle = row.alpha_mle > alpha_true, over_mple = row.alpha_mple > alpha_true;
    row.branch = over_mle && over_mple ? "both-over" : (!over_mle && !over_mple ? "both-under" : "mixed");
    slots[i] = row;
  });
  std::vector<WScatterRow> rows;
  for (auto& s : slots)
    if (s) rows.push_back(std::move(*s));
  return rows;
}

}  // namespace skewpen
