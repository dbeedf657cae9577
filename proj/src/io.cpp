#include "skewpen/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace skewpen {

using nlohmann::json;

namespace {

bool parse_fields(const std::string& line, std::vector<double>& out, std::string& bad) {
  out.clear();
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) {
    const auto a = f.find_first_not_of(" \t\r");
    const auto b = f.find_last_not_of(" \t\r");
    f = a == std::string::npos ? std::string() : f.substr(a, b - a + 1);
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(f, &pos);
    } catch (const std::exception&) {
      bad = f;
      return false;
    }
    if (pos != f.size() || !std::isfinite(v)) {
      bad = f;
      return false;
    }
    out.push_back(v);
  }
  if (!line.empty() && line.back() == ',') {
    bad = "";
    return false;
  }
  return true;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

Dataset read_csv(std::istream& in, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::string line, bad;
  std::vector<double> fields;
  int lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!parse_fields(line, fields, bad)) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw std::invalid_argument(source + ": line " + std::to_string(lineno) + ": non-numeric field '" + bad + "'");
    }
    first = false;
    if (!rows.empty() && fields.size() != rows.front().size()) {
      throw std::invalid_argument(source + ": line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(rows.front().size()) + " fields, found " +
                                  std::to_string(fields.size()));
    }
    rows.push_back(fields);
  }
  if (rows.empty()) throw std::invalid_argument(source + ": no data rows");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return Dataset(std::move(m));
}

Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  return read_csv(in, path);
}

void write_csv(std::ostream& out, const Dataset& data, const std::vector<std::string>& header) {
  const auto prec = out.precision(std::numeric_limits<double>::max_digits10);
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
  }
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.d(); ++j) out << (j ? "," : "") << data.rows()(i, j);
    out << '\n';
  }
  out.precision(prec);
}

json params_to_json(const DirectParams& p) {
  json j;
  const int d = p.dim();
  if (d == 1) {
    j["xi"] = num(p.xi[0]);
    j["omega"] = num(p.omega1());
    j["alpha"] = num(p.alpha[0]);
  } else {
    j["xi"] = std::vector<double>(p.xi.data(), p.xi.data() + d);
    json om = json::array();
    for (int r = 0; r < d; ++r) {
      std::vector<double> row(d);
      for (int c = 0; c < d; ++c) row[c] = p.omega_mat(r, c);
      om.push_back(row);
    }
    j["Omega"] = om;
    j["alpha"] = std::vector<double>(p.alpha.data(), p.alpha.data() + d);
    j["alpha_star"] = num(alpha_star(p));
  }
  if (p.nu) j["nu"] = num(*p.nu);
  return j;
}

json fit_to_json(const FitResult& f) {
  json j;
  j["schema"] = kFitSchema;
  j["method"] = method_name(f.method);
  j["estimates"] = params_to_json(f.estimates);
  j["loglik"] = num(f.loglik_at_opt);
  j["penalized_loglik"] = f.penalized_loglik_at_opt ? num(*f.penalized_loglik_at_opt) : json(nullptr);
  if (f.std_errors) {
    json se;
    for (std::size_t i = 0; i < f.param_names.size() && i < static_cast<std::size_t>(f.std_errors->size()); ++i)
      se[f.param_names[i]] = num((*f.std_errors)[i]);
    j["stderr"] = se;
  } else {
    j["stderr"] = nullptr;
    if (!f.stderr_note.empty()) j["stderr_note"] = f.stderr_note;
  }
  j["diverged"] = f.diverged;
  if (f.diverged) j["divergence_rule"] = f.divergence_rule;
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  if (!f.optimizer_trace.empty()) j["optimizer_trace"] = f.optimizer_trace;
  return j;
}

json wbar_diagnostics_to_json(const WbarDiagnostics& d) {
  return json{{"q_of_y", num(d.q_of_y)},
              {"r_of_y", num(d.r_of_y)},
              {"segment_parameter", num(d.segment_parameter)},
              {"roots_detected", d.roots_detected},
              {"sign_checks",
               {{"W_at_mple", num(d.sign_checks.w_at_mple)},
                {"Wp_at_mle", num(d.sign_checks.wp_at_mle)},
                {"Wp_minus_W_at_mple", num(d.sign_checks.g_at_mple)},
                {"Wp_minus_W_at_mle", num(d.sign_checks.g_at_mle)},
                {"hold", d.sign_checks.hold()}}}};
}

void summary_to_csv(std::ostream& out, const StudySummary& s) {
  const auto prec = out.precision(std::numeric_limits<double>::max_digits10);
  out << "estimator,parameter,n,statistic,value\n";
  for (const auto& r : s.rows) {
    auto line = [&](const char* stat, double v) {
      out << r.estimator << ',' << r.parameter << ',' << r.n << ',' << stat << ',';
      if (std::isfinite(v)) out << v;
      else out << "NA";
      out << '\n';
    };
    line("mean_bias", r.mean_bias);
    line("median_bias", r.median_bias);
    line("std_dev", r.std_dev);
    line("iqr", r.iqr);
    line("divergence_proportion", r.divergence_proportion);
    line("replicates_used", static_cast<double>(r.replicates_used));
    line("failures", static_cast<double>(r.failures));
    line("se_mean_bias", r.se_mean_bias);
    line("se_median_bias", r.se_median_bias);
    line("se_std_dev", r.se_std_dev);
    line("se_iqr", r.se_iqr);
  }
  out.precision(prec);
}

json study_to_json(const StudyResult& st) {
  const auto& c = st.config;
  json cfg;
  cfg["family"] = c.family == Family::SN ? "sn" : "st";
  cfg["model"] = c.one_parameter ? "one_parameter" : "full";
  cfg["true_params"] = params_to_json(c.true_params);
  cfg["sample_sizes"] = c.sample_sizes;
  std::vector<std::string> ests;
  for (auto m : c.estimators) ests.push_back(method_name(m));
  cfg["estimators"] = ests;
  cfg["replicates"] = c.replicates;
  cfg["base_seed"] = c.base_seed;
  cfg["divergence_threshold"] = c.divergence_threshold;
  cfg["bootstrap"] = c.bootstrap;
  cfg["mle_exclusion"] =
      c.mle_exclusion == StudyConfig::MleExclusion::all_parameters ? "all_parameters" : "alpha_only";
  cfg["wbar_on_diverged"] =
      c.wbar_on_diverged == StudyConfig::WbarOnDiverged::unavailable ? "unavailable" : "clamped";

  json rows = json::array();
  for (const auto& r : st.summary.rows) {
    rows.push_back({{"estimator", r.estimator},
                    {"parameter", r.parameter},
                    {"n", r.n},
                    {"mean_bias", num(r.mean_bias)},
                    {"median_bias", num(r.median_bias)},
                    {"std_dev", num(r.std_dev)},
                    {"iqr", num(r.iqr)},
                    {"divergence_proportion", num(r.divergence_proportion)},
                    {"replicates_used", r.replicates_used},
                    {"failures", r.failures},
                    {"se", {{"mean_bias", num(r.se_mean_bias)},
                            {"median_bias", num(r.se_median_bias)},
                            {"std_dev", num(r.se_std_dev)},
                            {"iqr", num(r.se_iqr)}}}});
  }
  return json{{"schema", kStudySchema}, {"config", cfg}, {"metadata", st.summary.metadata}, {"summary", rows}};
}

json rate_curves_to_json(const RateCurves& rc) {
  json j;
  for (const auto& [name, pts] : rc.points) {
    json arr = json::array();
    for (const auto& p : pts)
      arr.push_back({{"n", p.n},
                     {"log_n", num(p.log_n)},
                     {"log_abs_mean_bias", num(p.log_abs_mean_bias)},
                     {"log_sd", num(p.log_sd)},
                     {"log_abs_median_bias", num(p.log_abs_median_bias)},
                     {"log_iqr", num(p.log_iqr)}});
    j[name]["points"] = arr;
    const auto it = rc.mean_bias_slope.find(name);
    j[name]["mean_bias_slope"] = it != rc.mean_bias_slope.end() ? num(it->second) : json(nullptr);
  }
  return j;
}

}  // namespace skewpen
