#include "skewpen/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>

#include "skewpen/parallel.hpp"
#include "skewpen/wbar.hpp"

namespace skewpen {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  }
  if (pos != v.size()) throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  return x;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw std::invalid_argument("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: '" + key + "' is out of range");
  }
}

}  // namespace

ModelSpec StudyConfig::model_spec() const {
  ModelSpec s = family == Family::SN ? ModelSpec::sn(true_params.dim())
                                     : ModelSpec::st(true_params.dim(), true_params.nu);
  if (one_parameter) {
    s.fixed_xi = true_params.xi[0];
    s.fixed_omega = true_params.omega1();
  }
  return s;
}

void StudyConfig::validate() const {
  true_params.validate();
  if (true_params.family() != family) throw std::invalid_argument("config: nu must be given exactly for family st");
  if (replicates < 1) throw std::invalid_argument("config: replicates must be at least 1");
  if (sample_sizes.empty()) throw std::invalid_argument("config: sample_sizes is empty");
  for (auto n : sample_sizes)
    if (n < 1) throw std::invalid_argument("config: sample sizes must be positive");
  if (estimators.empty()) throw std::invalid_argument("config: no estimators requested");
  if (!(divergence_threshold > 0)) throw std::invalid_argument("config: divergence_threshold must be positive");
  if (one_parameter && (family != Family::SN || true_params.dim() != 1))
    throw std::invalid_argument("config: model one_parameter requires family sn");
  for (auto m : estimators)
    if (m == Method::SF && !one_parameter) throw std::invalid_argument("config: SF requires model one_parameter");
  model_spec().validate();
}

StudyConfig parse_study_config(std::istream& in) {
  StudyConfig c;
  std::optional<double> xi, omega, alpha, nu;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    try {
      if (key == "family") {
        if (val == "sn") c.family = Family::SN;
        else if (val == "st") c.family = Family::ST;
        else throw std::invalid_argument("config: family must be sn or st");
      } else if (key == "model") {
        if (val == "one_parameter") c.one_parameter = true;
        else if (val == "full") c.one_parameter = false;
        else throw std::invalid_argument("config: model must be full or one_parameter");
      } else if (key == "xi") {
        xi = to_double(key, val);
      } else if (key == "omega") {
        omega = to_double(key, val);
      } else if (key == "alpha") {
        alpha = to_double(key, val);
      } else if (key == "nu") {
        nu = to_double(key, val);
      } else if (key == "sample_sizes") {
        c.sample_sizes.clear();
        for (const auto& s : split_list(val)) c.sample_sizes.push_back(to_uint(key, s));
      } else if (key == "estimators") {
        c.estimators.clear();
        for (const auto& s : split_list(val)) {
          if (s == "all") {
            c.estimators = {Method::MLE, Method::MPLE, Method::SF, Method::WBAR};
          } else {
            c.estimators.push_back(parse_method(s));
          }
        }
      } else if (key == "replicates") {
        c.replicates = to_uint(key, val);
      } else if (key == "base_seed") {
        c.base_seed = to_uint(key, val);
      } else if (key == "divergence_threshold") {
        c.divergence_threshold = to_double(key, val);
      } else if (key == "threads") {
        c.threads = static_cast<unsigned>(to_uint(key, val));
      } else if (key == "bootstrap") {
        c.bootstrap = to_uint(key, val);
      } else if (key == "mle_exclusion") {
        if (val == "all_parameters") c.mle_exclusion = StudyConfig::MleExclusion::all_parameters;
        else if (val == "alpha_only") c.mle_exclusion = StudyConfig::MleExclusion::alpha_only;
        else throw std::invalid_argument("config: mle_exclusion must be all_parameters or alpha_only");
      } else if (key == "wbar_on_diverged") {
        if (val == "unavailable") c.wbar_on_diverged = StudyConfig::WbarOnDiverged::unavailable;
        else if (val == "clamped") c.wbar_on_diverged = StudyConfig::WbarOnDiverged::clamped;
        else throw std::invalid_argument("config: wbar_on_diverged must be unavailable or clamped");
      } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::sort(c.estimators.begin(), c.estimators.end());
  c.estimators.erase(std::unique(c.estimators.begin(), c.estimators.end()), c.estimators.end());
  c.true_params = DirectParams::scalar(xi.value_or(0.0), omega.value_or(1.0), alpha.value_or(5.0),
                                       c.family == Family::ST ? std::optional<double>(nu.value_or(5.0)) : nu);
  c.validate();
  return c;
}

StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  return parse_study_config(in);
}

const SummaryRow* StudySummary::find(const std::string& estimator, const std::string& parameter,
                                     std::size_t n) const {
  for (const auto& r : rows)
    if (r.estimator == estimator && r.parameter == parameter && r.n == n) return &r;
  return nullptr;
}

double quantile_type8(const std::vector<double>& x, double p) {
  if (x.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double n = static_cast<double>(x.size());
  const double h = (n + 1.0 / 3.0) * p + 1.0 / 3.0;
  if (h <= 1.0) return x.front();
  if (h >= n) return x.back();
  const auto lo = static_cast<std::size_t>(std::floor(h));
  return x[lo - 1] + (h - std::floor(h)) * (x[lo] - x[lo - 1]);
}

Stats column_stats(std::vector<double> v, double truth) {
  if (v.empty()) throw std::invalid_argument("summary of an empty sample");
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  Stats s;
  s.mean_bias = mean - truth;
  s.median_bias = quantile_type8(v, 0.5) - truth;
  s.std_dev = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.iqr = quantile_type8(v, 0.75) - quantile_type8(v, 0.25);
  return s;
}

std::vector<SummaryRow> summarize(const std::vector<Eigen::VectorXd>& estimates, const std::vector<bool>& diverged,
                                  const Eigen::VectorXd& truth, const std::vector<std::string>& names,
                                  std::size_t bootstrap, std::uint64_t seed,
                                  const std::vector<bool>& exclusion_columns) {
  if (estimates.empty()) throw std::invalid_argument("summarize: no estimates");
  if (diverged.size() != estimates.size()) throw std::invalid_argument("summarize: flag count mismatch");
  const auto k = static_cast<std::size_t>(truth.size());
  if (names.size() != k) throw std::invalid_argument("summarize: name count mismatch");
  if (!exclusion_columns.empty() && exclusion_columns.size() != k)
    throw std::invalid_argument("summarize: exclusion column count mismatch");
  std::size_t n_div = 0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (static_cast<std::size_t>(estimates[i].size()) != k) throw std::invalid_argument("summarize: estimate size mismatch");
    if (diverged[i]) ++n_div;
  }
  const double prop = static_cast<double>(n_div) / static_cast<double>(estimates.size());
  std::mt19937_64 rng(mix64(seed));
  auto sd_of = [](const std::vector<Stats>& bs, double Stats::*field) {
    if (bs.size() < 2) return 0.0;
    double m = 0.0;
    for (const auto& s : bs) m += s.*field;
    m /= bs.size();
    double ss = 0.0;
    for (const auto& s : bs) ss += (s.*field - m) * (s.*field - m);
    return std::sqrt(ss / (bs.size() - 1));
  };
  std::vector<SummaryRow> rows(k);
  for (std::size_t j = 0; j < k; ++j) {
    const bool exclude = exclusion_columns.empty() || exclusion_columns[j];
    std::vector<double> col;
    for (std::size_t i = 0; i < estimates.size(); ++i)
      if (!(exclude && diverged[i])) col.push_back(estimates[i][j]);
    SummaryRow& r = rows[j];
    r.parameter = names[j];
    r.divergence_proportion = prop;
    r.replicates_used = col.size();
    if (col.empty()) {
      r.mean_bias = r.median_bias = r.std_dev = r.iqr = std::nan("");
      continue;
    }
    const Stats s = column_stats(col, truth[j]);
    r.mean_bias = s.mean_bias;
    r.median_bias = s.median_bias;
    r.std_dev = s.std_dev;
    r.iqr = s.iqr;
    if (bootstrap > 0 && col.size() > 1) {
      std::uniform_int_distribution<std::size_t> pick(0, col.size() - 1);
      std::vector<Stats> boot;
      boot.reserve(bootstrap);
      std::vector<double> re(col.size());
      for (std::size_t b = 0; b < bootstrap; ++b) {
        for (auto& x : re) x = col[pick(rng)];
        boot.push_back(column_stats(re, truth[j]));
      }
      r.se_mean_bias = sd_of(boot, &Stats::mean_bias);
      r.se_median_bias = sd_of(boot, &Stats::median_bias);
      r.se_std_dev = sd_of(boot, &Stats::std_dev);
      r.se_iqr = sd_of(boot, &Stats::iqr);
    }
  }
  return rows;
}

StudyResult run_study(const StudyConfig& config, const ProgressFn& progress) {
  config.validate();
  StudyResult res;
  res.config = config;
  const ModelSpec spec = config.model_spec();
  const ParamCodec codec(spec);
  res.parameter_names = codec.direct_names();
  res.truth = codec.to_direct(config.true_params);

  const auto& ests = config.estimators;
  auto wants = [&](Method m) { return std::find(ests.begin(), ests.end(), m) != ests.end(); };
  const bool need_mle = wants(Method::MLE) || wants(Method::WBAR);
  const bool need_mple = wants(Method::MPLE) || wants(Method::WBAR);

  FitOptions fo;
  fo.compute_stderr = false;
  fo.divergence_threshold = config.divergence_threshold;

  const std::size_t R = config.replicates;
  res.cells.resize(config.sample_sizes.size());
  for (std::size_t c = 0; c < res.cells.size(); ++c) {
    res.cells[c].n = config.sample_sizes[c];
    res.cells[c].fits.assign(R, std::vector<ReplicateFit>(ests.size()));
  }
  const std::size_t total = R * res.cells.size();
  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;

  parallel_for(total, resolve_threads(config.threads), [&](std::size_t flat) {
    StudyCell& cell = res.cells[flat / R];
    const std::size_t rep = flat % R;
    const Dataset y = sample(config.true_params, cell.n, replicate_seed(config.base_seed, cell.n, rep));
    std::optional<FitResult> mle, mple;
    std::string mle_err, mple_err;
    if (need_mle) {
      try {
        mle = fit_mle(y, spec, fo);
      } catch (const std::exception& e) {
        mle_err = e.what();
      }
    }
    if (need_mple) {
      try {
        mple = fit_mple(y, spec, fo);
      } catch (const std::exception& e) {
        mple_err = e.what();
      }
    }
    for (std::size_t k = 0; k < ests.size(); ++k) {
      ReplicateFit& out = cell.fits[rep][k];
      auto take = [&](const FitResult& f) {
        out.ok = true;
        out.diverged = f.diverged;
        out.available = !f.diverged;
        out.estimate = codec.to_direct(f.estimates);
      };
      try {
        switch (ests[k]) {
          case Method::MLE:
            if (!mle) throw std::runtime_error(mle_err);
            take(*mle);
            break;
          case Method::MPLE:
            if (!mple) throw std::runtime_error(mple_err);
            take(*mple);
            break;
          case Method::SF:
            take(fit_sf_one_param(Dataset((y.rows().array() - *spec.fixed_xi) / *spec.fixed_omega), fo));
            break;
          case Method::WBAR:
            if (!mle) throw std::runtime_error(mle_err);
            if (!mple) throw std::runtime_error(mple_err);
            if (mle->diverged && config.wbar_on_diverged == StudyConfig::WbarOnDiverged::unavailable) {
              out.ok = true;
              out.available = false;
            } else if (mle->diverged) {
              FitResult clamped = *mle;
              clamped.diverged = false;
              take(fit_wbar(y, spec, clamped, *mple).fit);
            } else {
              take(fit_wbar(y, spec, *mle, *mple).fit);
            }
            break;
        }
      } catch (const std::exception& e) {
        out = ReplicateFit{};
        out.error = e.what();
      }
    }
    const std::size_t d = ++done;
    if (progress) {
      std::lock_guard<std::mutex> lk(progress_mu);
      progress(d, total);
    }
  });

  // summaries in fixed order, independent of scheduling
  for (std::size_t c = 0; c < res.cells.size(); ++c) {
    const StudyCell& cell = res.cells[c];
    for (std::size_t k = 0; k < ests.size(); ++k) {
      std::vector<Eigen::VectorXd> est;
      std::vector<bool> excluded;
      std::size_t failures = 0, unavailable = 0;
      for (std::size_t r = 0; r < R; ++r) {
        const ReplicateFit& f = cell.fits[r][k];
        if (!f.ok) {
          ++failures;
          continue;
        }
        if (!f.available && !f.diverged) {
          ++unavailable;
          continue;
        }
        est.push_back(f.estimate);
        excluded.push_back(f.diverged);
      }
      const std::string name = method_name(ests[k]);
      if (est.empty()) {
        for (const auto& pname : res.parameter_names) {
          SummaryRow r;
          r.estimator = name;
          r.parameter = pname;
          r.n = cell.n;
          r.failures = failures;
          r.mean_bias = r.median_bias = r.std_dev = r.iqr = std::nan("");
          res.summary.rows.push_back(r);
        }
        continue;
      }
      const std::uint64_t bseed = replicate_seed(config.base_seed ^ 0xb007ULL, cell.n, k);
      std::vector<bool> columns;
      if (ests[k] == Method::MLE && config.mle_exclusion == StudyConfig::MleExclusion::alpha_only) {
        columns.assign(res.parameter_names.size(), false);
        for (std::size_t j = 0; j < columns.size(); ++j) columns[j] = res.parameter_names[j].rfind("alpha", 0) == 0;
      }
      auto rows = summarize(est, excluded, res.truth, res.parameter_names, config.bootstrap, bseed, columns);
      for (auto& r : rows) {
        r.estimator = name;
        r.n = cell.n;
        r.failures = failures;
        if (ests[k] == Method::WBAR) r.divergence_proportion = 0.0;
        res.summary.rows.push_back(r);
      }
    }
  }
  auto& md = res.summary.metadata;
  md["quantiles"] = "Hyndman-Fan type 8 (median-unbiased)";
  md["mle_exclusion"] = config.mle_exclusion == StudyConfig::MleExclusion::all_parameters
                            ? "replicates with a diverged MLE are excluded from every MLE parameter summary"
                            : "replicates with a diverged MLE are excluded from the MLE alpha summaries only";
  md["wbar_availability"] = config.wbar_on_diverged == StudyConfig::WbarOnDiverged::unavailable
                                ? "WBAR is computed only for replicates with a finite MLE"
                                : "WBAR uses the threshold-clamped MLE when the MLE diverged";
  md["divergence_rule"] = "|alpha| above the threshold, or a likelihood no better than its alpha -> infinity limit";
  md["divergence_threshold"] = std::to_string(config.divergence_threshold);
  md["seeding"] = "per-replicate seed = splitmix64 chain of (base_seed, n, replicate index); mt19937_64";
  md["bootstrap_resamples"] = std::to_string(config.bootstrap);
  md["std_dev"] = "sample standard deviation (divisor m - 1)";
  return res;
}

RateCurves rate_curves(const StudyResult& study) {
  if (!study.config.one_parameter) throw std::invalid_argument("rate_curves: one-parameter study required");
  RateCurves rc;
  for (Method m : study.config.estimators) {
    const std::string name = method_name(m);
    std::vector<RatePoint> pts;
    for (std::size_t n : study.config.sample_sizes) {
      const SummaryRow* r = study.summary.find(name, "alpha", n);
      if (!r || r->replicates_used == 0) continue;
      RatePoint p;
      p.n = n;
      p.log_n = std::log(static_cast<double>(n));
      p.log_abs_mean_bias = std::log(std::fabs(r->mean_bias));
      p.log_sd = std::log(r->std_dev);
      p.log_abs_median_bias = std::log(std::fabs(r->median_bias));
      p.log_iqr = std::log(r->iqr);
      pts.push_back(p);
    }
    if (pts.size() >= 2) {
      double mx = 0, my = 0;
      for (const auto& p : pts) {
        mx += p.log_n;
        my += p.log_abs_mean_bias;
      }
      mx /= pts.size();
      my /= pts.size();
      double sxy = 0, sxx = 0;
      for (const auto& p : pts) {
        sxy += (p.log_n - mx) * (p.log_abs_mean_bias - my);
        sxx += (p.log_n - mx) * (p.log_n - mx);
      }
      rc.mean_bias_slope[name] = sxy / sxx;
    }
    rc.points[name] = std::move(pts);
  }
  return rc;
}

}  // namespace skewpen
