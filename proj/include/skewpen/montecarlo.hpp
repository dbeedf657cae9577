#pragma once

// Seeded, parallel simulation studies: per-replicate fits, summaries with
// bootstrap standard errors, and log-log rate curves.

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skewpen/estimators.hpp"

namespace skewpen {

struct StudyConfig {
  Family family = Family::SN;
  bool one_parameter = false;  // SN(0, 1, alpha) with xi, omega known
  DirectParams true_params = DirectParams::scalar(0.0, 1.0, 5.0);
  std::vector<std::size_t> sample_sizes{50};
  std::vector<Method> estimators{Method::MLE, Method::MPLE};
  std::size_t replicates = 2000;
  std::uint64_t base_seed = 1;
  double divergence_threshold = 100.0;
  unsigned threads = 0;       // 0: hardware concurrency
  std::size_t bootstrap = 200;  // resamples for summary standard errors
  // Diverged MLE replicates are dropped from every MLE parameter summary, or
  // (alpha_only) just from the shape summaries; the nuisance estimates of a
  // diverged fit are finite and then enter their summaries.
  enum class MleExclusion { all_parameters, alpha_only };
  MleExclusion mle_exclusion = MleExclusion::all_parameters;
  // W-bar after a diverged MLE: unavailable, or computed from the fit
  // clamped at the divergence threshold.
  enum class WbarOnDiverged { unavailable, clamped };
  WbarOnDiverged wbar_on_diverged = WbarOnDiverged::unavailable;

  ModelSpec model_spec() const;
  void validate() const;
};

/// key = value lines; '#' starts a comment. Keys: family, model, xi, omega,
/// alpha, nu, sample_sizes, estimators, replicates, base_seed,
/// divergence_threshold, threads, bootstrap, mle_exclusion, wbar_on_diverged.
StudyConfig parse_study_config(std::istream& in);
StudyConfig load_study_config(const std::string& path);

struct ReplicateFit {
  bool ok = false;        // fit ran without error
  bool available = false; // estimate exists (false for diverged MLE, WBAR after MLE divergence)
  bool diverged = false;
  Eigen::VectorXd estimate;  // direct layout of the model's free parameters
  std::string error;
};

struct StudyCell {
  std::size_t n = 0;
  // replicates x estimators, in config.estimators order
  std::vector<std::vector<ReplicateFit>> fits;
};

struct SummaryRow {
  std::string estimator;
  std::string parameter;
  std::size_t n = 0;
  double mean_bias = 0.0;
  double median_bias = 0.0;
  double std_dev = 0.0;
  double iqr = 0.0;
  double divergence_proportion = 0.0;
  std::size_t replicates_used = 0;
  std::size_t failures = 0;
  // bootstrap standard errors of the four statistics
  double se_mean_bias = 0.0;
  double se_median_bias = 0.0;
  double se_std_dev = 0.0;
  double se_iqr = 0.0;
};

struct StudySummary {
  std::vector<SummaryRow> rows;
  std::map<std::string, std::string> metadata;

  const SummaryRow* find(const std::string& estimator, const std::string& parameter, std::size_t n) const;
};

struct StudyResult {
  StudyConfig config;
  std::vector<std::string> parameter_names;
  Eigen::VectorXd truth;
  std::vector<StudyCell> cells;
  StudySummary summary;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

StudyResult run_study(const StudyConfig& config, const ProgressFn& progress = {});

/// Statistics of one column of estimates against a true value.
struct Stats {
  double mean_bias = 0.0;
  double median_bias = 0.0;
  double std_dev = 0.0;
  double iqr = 0.0;
};
/// Median-unbiased quantile (Hyndman-Fan type 8) of sorted data.
double quantile_type8(const std::vector<double>& sorted, double p);
Stats column_stats(std::vector<double> values, double truth);

/// Summary rows for one estimator at one n. `diverged` flags replicates
/// that are dropped from the columns marked in `exclusion_columns` (empty:
/// every column, i.e. the whole estimate vector).
std::vector<SummaryRow> summarize(const std::vector<Eigen::VectorXd>& estimates, const std::vector<bool>& diverged,
                                  const Eigen::VectorXd& truth, const std::vector<std::string>& names,
                                  std::size_t bootstrap = 0, std::uint64_t seed = 0,
                                  const std::vector<bool>& exclusion_columns = {});

struct RatePoint {
  std::size_t n = 0;
  double log_n = 0.0;
  double log_abs_mean_bias = 0.0;
  double log_sd = 0.0;
  double log_abs_median_bias = 0.0;
  double log_iqr = 0.0;
};

struct RateCurves {
  std::map<std::string, std::vector<RatePoint>> points;   // by estimator
  std::map<std::string, double> mean_bias_slope;           // least-squares slope vs log n
};

/// Rate curves of the alpha component from a one-parameter study.
RateCurves rate_curves(const StudyResult& study);

}  // namespace skewpen
