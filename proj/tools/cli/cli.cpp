#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "skewpen/distributions.hpp"
#include "skewpen/estimators.hpp"
#include "skewpen/io.hpp"
#include "skewpen/likelihood.hpp"
#include "skewpen/montecarlo.hpp"
#include "skewpen/penalty.hpp"
#include "skewpen/wbar.hpp"

namespace skewpen::cli {

namespace {

using nlohmann::json;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Writes to the output path when given, else to the default stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::invalid_argument("cannot open output file '" + path + "'");
    }
    os_ = file_ ? file_.get() : &fallback;
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

double parse_number(const std::string& what, const std::string& s) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw UsageError(what + ": not a number: '" + s + "'");
  }
  if (pos != s.size()) throw UsageError(what + ": not a number: '" + s + "'");
  return v;
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

Family parse_family(const std::string& s) {
  if (s == "sn") return Family::SN;
  if (s == "st") return Family::ST;
  throw UsageError("family must be sn or st");
}

struct ModelFlags {
  std::string family = "sn";
  std::vector<std::string> fixes;
  std::string penalty = "auto";
  bool one_parameter = false;

  void add_to(CLI::App* app) {
    app->add_option("--family", family, "sn or st")->check(CLI::IsMember({"sn", "st"}));
    app->add_option("--fix", fixes, "pin a component, e.g. nu=4, alpha=0, xi=0, omega=1 (repeatable)");
    app->add_option("--penalty", penalty, "skew-t penalty coefficients: exact or approx")
        ->check(CLI::IsMember({"auto", "exact", "approx"}));
    app->add_flag("--one-parameter", one_parameter, "SN(0, 1, alpha): shorthand for --fix xi=0 --fix omega=1");
  }

  ModelSpec build(int dim) const {
    const Family fam = parse_family(family);
    ModelSpec s = fam == Family::SN ? ModelSpec::sn(dim) : ModelSpec::st(dim);
    if (one_parameter) {
      s.fixed_xi = 0.0;
      s.fixed_omega = 1.0;
    }
    for (const auto& f : fixes) {
      const auto eq = f.find('=');
      if (eq == std::string::npos) throw UsageError("--fix expects name=value, got '" + f + "'");
      const std::string name = f.substr(0, eq);
      const double v = parse_number("--fix " + name, f.substr(eq + 1));
      if (name == "nu") {
        if (fam != Family::ST) throw UsageError("--fix nu requires --family st");
        s.fixed_nu = v;
      } else if (name == "xi") {
        s.fixed_xi = v;
      } else if (name == "omega") {
        s.fixed_omega = v;
      } else if (name == "alpha") {
        s.fixed_alpha = v;
      } else {
        throw UsageError("--fix: unknown component '" + name + "' (expected xi, omega, alpha or nu)");
      }
    }
    if (penalty == "exact") {
      if (fam != Family::ST) throw UsageError("--penalty applies to --family st");
      s.penalty.mode = PenaltySpec::Mode::st_exact;
    } else if (penalty == "approx") {
      if (fam != Family::ST) throw UsageError("--penalty applies to --family st");
      s.penalty.mode = PenaltySpec::Mode::st_approx;
    }
    s.validate();
    return s;
  }
};

json unavailable(Method m, const std::string& reason) {
  return json{{"schema", kFitSchema}, {"method", method_name(m)}, {"available", false}, {"reason", reason}};
}

// ---------------------------------------------------------------------------

struct FitCmd {
  std::string input;
  std::string output;
  std::string estimator = "mple";
  ModelFlags model;
  double threshold = 100.0;
  bool no_stderr = false;
  std::optional<std::uint64_t> seed;

  int run(std::ostream& out) const {
    const Dataset data = read_csv_file(input);
    const ModelSpec spec = model.build(static_cast<int>(data.d()));

    std::vector<Method> methods;
    if (estimator == "all") methods = {Method::MLE, Method::MPLE, Method::SF, Method::WBAR};
    else methods = {parse_method(estimator)};

    FitOptions fo;
    fo.divergence_threshold = threshold;
    fo.compute_stderr = !no_stderr;

    const bool need_mle = std::count(methods.begin(), methods.end(), Method::MLE) ||
                          std::count(methods.begin(), methods.end(), Method::WBAR);
    const bool need_mple = std::count(methods.begin(), methods.end(), Method::MPLE) ||
                           std::count(methods.begin(), methods.end(), Method::WBAR);
    std::optional<FitResult> mle, mple;
    if (need_mle) mle = fit_mle(data, spec, fo);
    if (need_mple) mple = fit_mple(data, spec, fo);

    json fits = json::array();
    for (Method m : methods) {
      switch (m) {
        case Method::MLE:
          fits.push_back(fit_to_json(*mle));
          break;
        case Method::MPLE:
          fits.push_back(fit_to_json(*mple));
          break;
        case Method::SF: {
          if (!spec.is_one_parameter_sn()) {
            if (methods.size() == 1)
              throw UsageError("sf needs the one-parameter model (--one-parameter, or --fix xi= --fix omega=)");
            fits.push_back(unavailable(m, "sf is defined for the one-parameter model only"));
            break;
          }
          const Dataset z((data.rows().array() - *spec.fixed_xi) / *spec.fixed_omega);
          fits.push_back(fit_to_json(fit_sf_one_param(z, fo)));
          break;
        }
        case Method::WBAR: {
          if (mle->diverged) {
            fits.push_back(unavailable(m, "the MLE diverged, so the W = Wp root is undefined"));
            break;
          }
          const WbarFit w = fit_wbar(data, spec, *mle, *mple);
          json j = fit_to_json(w.fit);
          j["diagnostics"] = wbar_diagnostics_to_json(w.diagnostics);
          fits.push_back(j);
          break;
        }
      }
    }
    json doc{{"schema", kFitSchema},
             {"input", input},
             {"n", data.n()},
             {"d", data.d()},
             {"model", spec.describe()},
             {"penalty", spec.nu_free() ? std::string(spec.penalty.mode == PenaltySpec::Mode::st_exact
                                                          ? "exact, evaluated at the fitted nu"
                                                          : "approx, evaluated at the fitted nu")
                                        : spec.penalty_coeffs(spec.fixed_nu).describe()},
             {"fits", fits}};
    if (seed) doc["seed"] = *seed;
    Sink sink(output, out);
    *sink << doc.dump(2) << '\n';
    return mle && mle->diverged ? kExitDiverged : kExitOk;
  }
};

struct SimulateCmd {
  std::string config;
  std::string output;
  std::string format = "csv";
  std::optional<unsigned> threads;
  std::optional<std::size_t> replicates;
  std::optional<std::uint64_t> seed;
  bool rate = false;
  bool quiet = false;

  int run(std::ostream& out, std::ostream& err) const {
    StudyConfig cfg = load_study_config(config);
    if (threads) cfg.threads = *threads;
    if (replicates) cfg.replicates = *replicates;
    if (seed) cfg.base_seed = *seed;
    cfg.validate();
    if (rate && !cfg.one_parameter) throw UsageError("--rate-curves needs model = one_parameter");
    std::size_t last_pct = 101;
    ProgressFn progress;
    if (!quiet) {
      progress = [&](std::size_t done, std::size_t total) {
        const std::size_t pct = done * 100 / total;
        if (pct != last_pct && (pct % 5 == 0 || done == total)) {
          err << "\rsimulate: " << done << "/" << total << " (" << pct << "%)" << std::flush;
          last_pct = pct;
        }
      };
    }
    const StudyResult res = run_study(cfg, progress);
    if (!quiet) err << '\n';
    Sink sink(output, out);
    std::ostream& os = *sink;
    if (format == "json") {
      json doc = study_to_json(res);
      if (rate) doc["rate_curves"] = rate_curves_to_json(rate_curves(res));
      os << doc.dump(2) << '\n';
    } else {
      summary_to_csv(os, res.summary);
      if (rate) {
        const RateCurves rc = rate_curves(res);
        os << "\nestimator,n,log_n,log_abs_mean_bias,log_sd,log_abs_median_bias,log_iqr\n";
        os << std::setprecision(std::numeric_limits<double>::max_digits10);
        for (const auto& [name, pts] : rc.points)
          for (const auto& p : pts)
            os << name << ',' << p.n << ',' << p.log_n << ',' << p.log_abs_mean_bias << ',' << p.log_sd << ','
               << p.log_abs_median_bias << ',' << p.log_iqr << '\n';
      }
    }
    return kExitOk;
  }
};

struct CoeffsCmd {
  std::string grid = "0.5,1,2,3,5,10,20,50,100,inf";
  std::string output;
  std::string format = "csv";

  int run(std::ostream& out) const {
    std::vector<std::optional<double>> nus;
    std::stringstream ss(grid);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item == "inf" || item == "Inf" || item == "infinity") {
        nus.push_back(std::nullopt);
        continue;
      }
      const double v = parse_number("--nu-grid", item);
      if (!(v > 0) || !std::isfinite(v)) throw UsageError("--nu-grid: nu must be positive, got '" + item + "'");
      nus.push_back(v);
    }
    if (nus.empty()) throw UsageError("--nu-grid is empty");

    json rows = json::array();
    for (const auto& nu : nus) {
      json r;
      if (!nu) {
        const ECoeffs e = sn_e_coeffs();
        const PenaltyCoeffs c = sn_coeffs();
        r = {{"nu", "inf"}, {"e1", e.e1}, {"e2_exact", e.e2}, {"e2_approx", e.e2}, {"c1_exact", c.c1},
             {"c2_exact", c.c2}, {"c1_approx", c.c1}, {"c2_approx", c.c2}, {"rel_diff_c2", 0.0}};
      } else {
        const ECoeffs e = st_e_coeffs_exact(*nu);
        const PenaltyCoeffs ce = st_coeffs(*nu, StMode::exact), ca = st_coeffs(*nu, StMode::approx);
        r = {{"nu", *nu}, {"e1", e.e1}, {"e2_exact", e.e2}, {"e2_approx", st_e2_approx(*nu)},
             {"c1_exact", ce.c1}, {"c2_exact", ce.c2}, {"c1_approx", ca.c1}, {"c2_approx", ca.c2},
             {"rel_diff_c2", ca.c2 / ce.c2 - 1.0}};
      }
      rows.push_back(r);
    }
    Sink sink(output, out);
    std::ostream& os = *sink;
    if (format == "json") {
      os << json{{"schema", kCoeffsSchema}, {"rows", rows}}.dump(2) << '\n';
      return kExitOk;
    }
    const char* cols[] = {"nu", "e1", "e2_exact", "e2_approx", "c1_exact", "c2_exact", "c1_approx", "c2_approx",
                          "rel_diff_c2"};
    for (std::size_t i = 0; i < std::size(cols); ++i) os << (i ? "," : "") << cols[i];
    os << '\n' << std::setprecision(10);
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < std::size(cols); ++i) {
        if (i) os << ',';
        const json& v = r[cols[i]];
        if (v.is_string()) os << v.get<std::string>();
        else os << v.get<double>();
      }
      os << '\n';
    }
    return kExitOk;
  }
};

struct ProfileCmd {
  std::string input;
  std::string output;
  std::string grid = "-10:10:41";
  ModelFlags model;

  std::vector<double> parse_grid() const {
    std::vector<std::string> parts;
    std::stringstream ss(grid);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(p);
    if (parts.size() != 3) throw UsageError("--grid expects lo:hi:steps");
    const double lo = parse_number("--grid lo", parts[0]), hi = parse_number("--grid hi", parts[1]);
    const double steps = parse_number("--grid steps", parts[2]);
    if (!(hi > lo) || !(steps >= 2) || steps != std::floor(steps) || steps > 100000)
      throw UsageError("--grid needs lo < hi and an integer steps >= 2");
    const int k = static_cast<int>(steps);
    std::vector<double> g(k);
    for (int i = 0; i < k; ++i) g[i] = lo + (hi - lo) * i / (k - 1);
    return g;
  }

  int run(std::ostream& out) const {
    const auto g = parse_grid();
    const Dataset data = read_csv_file(input);
    if (data.d() != 1) throw UsageError("profile expects a single data column");
    const ModelSpec spec = model.build(1);
    const auto pts = profile_deviance(g, data, spec);
    Sink sink(output, out);
    std::ostream& os = *sink;
    os << "alpha,deviance,converged\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& pt : pts) os << pt.alpha << ',' << pt.deviance << ',' << (pt.converged ? 1 : 0) << '\n';
    return kExitOk;
  }
};

struct SampleCmd {
  std::string output;
  std::string family = "sn";
  double xi = 0.0, omega = 1.0, alpha = 0.0;
  std::optional<double> nu;
  std::size_t n = 100;
  std::optional<std::uint64_t> seed;

  int run(std::ostream& out, std::ostream& err) const {
    const Family fam = parse_family(family);
    if (fam == Family::ST && !nu) throw UsageError("--family st needs --nu");
    if (fam == Family::SN && nu) throw UsageError("--nu applies to --family st");
    const DirectParams p = DirectParams::scalar(xi, omega, alpha, nu);
    p.validate();
    const std::uint64_t s = seed ? *seed : fresh_seed();
    if (!seed) err << "seed: " << s << '\n';
    const Dataset y = sample(p, n, s);
    Sink sink(output, out);
    write_csv(*sink, y, {"y"});
    return kExitOk;
  }
};

struct WScatterCmd {
  std::string output;
  std::size_t n = 100;
  std::size_t reps = 1000;
  double alpha = 5.0;
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;

  int run(std::ostream& out, std::ostream& err) const {
    const std::uint64_t s = seed ? *seed : fresh_seed();
    if (!seed) err << "seed: " << s << '\n';
    const auto rows = emit_w_scatter(reps, n, alpha, s, threads);
    Sink sink(output, out);
    std::ostream& os = *sink;
    os << "W,Wp,branch,replicate,alpha_mle,alpha_mple\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : rows)
      os << r.W << ',' << r.Wp << ',' << r.branch << ',' << r.replicate << ',' << r.alpha_mle << ',' << r.alpha_mple
         << '\n';
    return kExitOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Penalized likelihood estimation for skew-normal and skew-t models", "skewpen"};
  app.require_subcommand(1);

  FitCmd fit;
  auto* f = app.add_subcommand("fit", "fit a model to CSV data, JSON report");
  f->add_option("input", fit.input, "CSV file, one column per coordinate")->required();
  f->add_option("-o,--output", fit.output, "output file (default stdout)");
  f->add_option("--estimator", fit.estimator, "mle, mple, sf, wbar or all")
      ->check(CLI::IsMember({"mle", "mple", "sf", "wbar", "all"}));
  fit.model.add_to(f);
  f->add_option("--threshold", fit.threshold, "|alpha| beyond which the MLE counts as diverged");
  f->add_flag("--no-stderr", fit.no_stderr, "skip standard errors");
  f->add_option("--seed", fit.seed, "recorded in the report; fitting itself is deterministic");

  SimulateCmd sim;
  auto* s = app.add_subcommand("simulate", "run a simulation study from a key = value config");
  s->add_option("config", sim.config, "config file")->required();
  s->add_option("-o,--output", sim.output, "output file (default stdout)");
  s->add_option("--format", sim.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  s->add_option("--threads", sim.threads, "worker threads (0: all cores)");
  s->add_option("--replicates", sim.replicates, "override replicates");
  s->add_option("--seed", sim.seed, "override base_seed");
  s->add_flag("--rate-curves", sim.rate, "append log-log rate curves (one-parameter studies)");
  s->add_flag("-q,--quiet", sim.quiet, "no progress on stderr");

  CoeffsCmd co;
  auto* c = app.add_subcommand("coeffs", "penalty coefficients over a grid of nu");
  c->add_option("--nu-grid", co.grid, "comma list of nu values; inf gives the skew-normal row");
  c->add_option("-o,--output", co.output, "output file (default stdout)");
  c->add_option("--format", co.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  ProfileCmd pr;
  auto* p = app.add_subcommand("profile", "profile deviance of alpha, CSV");
  p->add_option("input", pr.input, "CSV file with one column")->required();
  p->add_option("--grid", pr.grid, "lo:hi:steps");
  p->add_option("-o,--output", pr.output, "output file (default stdout)");
  pr.model.add_to(p);

  SampleCmd sa;
  auto* sp = app.add_subcommand("sample", "draw a univariate SN or ST sample, CSV");
  sp->add_option("--family", sa.family, "sn or st")->check(CLI::IsMember({"sn", "st"}));
  sp->add_option("--xi", sa.xi);
  sp->add_option("--omega", sa.omega);
  sp->add_option("--alpha", sa.alpha);
  sp->add_option("--nu", sa.nu);
  sp->add_option("-n,--n", sa.n, "sample size")->check(CLI::PositiveNumber);
  sp->add_option("--seed", sa.seed, "RNG seed; generated and printed to stderr when absent");
  sp->add_option("-o,--output", sa.output, "output file (default stdout)");

  WScatterCmd ws;
  auto* w = app.add_subcommand("wscatter", "W and Wp at the true alpha per replicate, CSV");
  w->add_option("-n,--n", ws.n, "sample size")->check(CLI::PositiveNumber);
  w->add_option("--reps", ws.reps, "replicates")->check(CLI::PositiveNumber);
  w->add_option("--alpha", ws.alpha, "true alpha");
  w->add_option("--threads", ws.threads, "worker threads (0: all cores)");
  w->add_option("--seed", ws.seed, "RNG seed; generated and printed to stderr when absent");
  w->add_option("-o,--output", ws.output, "output file (default stdout)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
    return kExitError;
  }

  try {
    if (f->parsed()) return fit.run(out);
    if (s->parsed()) return sim.run(out, err);
    if (c->parsed()) return co.run(out);
    if (p->parsed()) return pr.run(out);
    if (sp->parsed()) return sa.run(out, err);
    if (w->parsed()) return ws.run(out, err);
  } catch (const std::exception& e) {
    err << "skewpen: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace skewpen::cli
