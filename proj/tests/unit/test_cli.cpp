#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "skewpen/distributions.hpp"
#include "skewpen/io.hpp"
#include "skewpen/penalty.hpp"

using namespace skewpen;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream o, e;
  Run r;
  r.code = cli::run(args, o, e);
  r.out = o.str();
  r.err = e.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "skewpen_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("cli: usage errors and help") {
  CHECK(run({}).code == cli::kExitError);
  CHECK(run({"frobnicate"}).code == cli::kExitError);
  CHECK(run({"--help"}).code == cli::kExitOk);
  CHECK(run({"fit", "--help"}).code == cli::kExitOk);
  CHECK(run({"fit", "/nonexistent.csv"}).code == cli::kExitError);
  CHECK(run({"fit", "x.csv", "--estimator", "bayes"}).code == cli::kExitError);
}

TEST_CASE("cli: all-positive column gives a diverged MLE and a finite MPLE") {
  const auto p = scratch("positive.csv");
  std::ostringstream text;
  text << "y\n";
  for (int i = 1; i <= 25; ++i) text << 0.1 * i << "\n";
  write_file(p, text.str());
  const Run r = run({"fit", p.string(), "--one-parameter", "--estimator", "all"});
  REQUIRE(r.code == cli::kExitDiverged);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["schema"] == kFitSchema);
  REQUIRE(j["fits"].size() == 4);
  CHECK(j["fits"][0]["method"] == "MLE");
  CHECK(j["fits"][0]["diverged"] == true);
  CHECK(j["fits"][1]["method"] == "MPLE");
  CHECK(j["fits"][1]["diverged"] == false);
  const double a = j["fits"][1]["estimates"]["alpha"];
  CHECK(std::isfinite(a));
  CHECK(a > 0.0);
  CHECK(j["fits"][2]["method"] == "SF");
  CHECK(j["fits"][3]["available"] == false);
}

TEST_CASE("cli: alpha pinned at 0 reproduces the Gaussian fit") {
  const auto p = scratch("gauss.csv");
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(2.0, 3.0);
  std::vector<double> v(300);
  for (auto& x : v) x = z(rng);
  std::ofstream(p) << "";
  {
    std::ofstream f(p);
    write_csv(f, Dataset::column(v), {"y"});
  }
  const Run r = run({"fit", p.string(), "--fix", "alpha=0", "--estimator", "mle"});
  REQUIRE(r.code == cli::kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  double m = 0, s = 0;
  for (double x : v) m += x;
  m /= v.size();
  for (double x : v) s += (x - m) * (x - m);
  s = std::sqrt(s / v.size());
  CHECK(std::fabs(j["fits"][0]["estimates"]["xi"].get<double>() - m) < 1e-6);
  CHECK(std::fabs(j["fits"][0]["estimates"]["omega"].get<double>() - s) < 1e-6);
}

TEST_CASE("cli: malformed row names its line") {
  const auto p = scratch("bad.csv");
  write_file(p, "y\n1.0\n2.0\nthree\n4.0\n");
  const Run r = run({"fit", p.string()});
  CHECK(r.code == cli::kExitError);
  CHECK(r.err.find("line 4") != std::string::npos);
}

TEST_CASE("cli: coefficient table") {
  const Run r = run({"coeffs", "--nu-grid", "2,10,inf", "--format", "json"});
  REQUIRE(r.code == cli::kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["schema"] == kCoeffsSchema);
  REQUIRE(j["rows"].size() == 3);
  const auto& sn = j["rows"][2];
  CHECK(sn["nu"] == "inf");
  CHECK(std::fabs(sn["c1_exact"].get<double>() - sn_coeffs().c1) < 1e-12);
  CHECK(std::fabs(sn["c2_exact"].get<double>() - sn_coeffs().c2) < 1e-12);
  for (int i = 0; i < 2; ++i) CHECK(std::fabs(j["rows"][i]["rel_diff_c2"].get<double>()) < 0.05);

  const Run csv = run({"coeffs", "--nu-grid", "5"});
  CHECK(csv.code == cli::kExitOk);
  CHECK(csv.out.rfind("nu,e1,e2_exact", 0) == 0);
  CHECK(run({"coeffs", "--nu-grid", "0"}).code == cli::kExitError);
  CHECK(run({"coeffs", "--nu-grid", "-2,3"}).code == cli::kExitError);
}

TEST_CASE("cli: sample, round trip and seeds") {
  const auto p = scratch("rt.csv");
  REQUIRE(run({"sample", "--alpha", "3", "-n", "10000", "--seed", "17", "-o", p.string()}).code == cli::kExitOk);
  const Run f = run({"fit", p.string(), "--estimator", "mple", "--no-stderr"});
  REQUIRE(f.code == cli::kExitOk);
  const double a = nlohmann::json::parse(f.out)["fits"][0]["estimates"]["alpha"];
  CHECK(std::fabs(a - 3.0) < 0.5);

  const Run s1 = run({"sample", "-n", "5", "--seed", "3"});
  const Run s2 = run({"sample", "-n", "5", "--seed", "3"});
  CHECK(s1.out == s2.out);
  const Run gen = run({"sample", "-n", "5"});
  CHECK(gen.code == cli::kExitOk);
  CHECK(gen.err.rfind("seed: ", 0) == 0);
  CHECK(run({"sample", "--family", "st", "-n", "5", "--seed", "1"}).code == cli::kExitError);
  CHECK(run({"sample", "--family", "st", "--nu", "4", "-n", "5", "--seed", "1"}).code == cli::kExitOk);
}

TEST_CASE("cli: profile") {
  const auto p = scratch("prof.csv");
  {
    std::ofstream f(p);
    write_csv(f, sample(DirectParams::scalar(0, 1, 3), 80, 6), {"y"});
  }
  const Run r = run({"profile", p.string(), "--grid", "0:6:7"});
  REQUIRE(r.code == cli::kExitOk);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "alpha,deviance,converged");
  int rows = 0;
  double dmin = 1e300;
  while (std::getline(in, line)) {
    ++rows;
    const double d = std::stod(line.substr(line.find(',') + 1));
    CHECK(d >= -1e-9);
    dmin = std::min(dmin, d);
  }
  CHECK(rows == 7);
  CHECK(dmin < 1.0);
  CHECK(run({"profile", p.string(), "--grid", "3:1:5"}).code == cli::kExitError);
  CHECK(run({"profile", p.string(), "--grid", "1:3"}).code == cli::kExitError);
}

TEST_CASE("cli: simulate is reproducible") {
  const auto cfg = scratch("tiny.cfg");
  write_file(cfg, "model = one_parameter\nsample_sizes = 20\nestimators = all\nreplicates = 1\nbootstrap = 0\n");
  const Run a = run({"simulate", cfg.string(), "-q"});
  REQUIRE(a.code == cli::kExitOk);
  CHECK(a.out.rfind("estimator,parameter,n,statistic,value", 0) == 0);

  write_file(cfg, "model = one_parameter\nsample_sizes = 20, 40\nestimators = mle, mple\nreplicates = 15\n");
  const Run b1 = run({"simulate", cfg.string(), "-q", "--format", "json", "--rate-curves"});
  const Run b2 = run({"simulate", cfg.string(), "-q", "--format", "json", "--rate-curves", "--threads", "3"});
  REQUIRE(b1.code == cli::kExitOk);
  CHECK(b1.out == b2.out);
  const auto j = nlohmann::json::parse(b1.out);
  CHECK(j["schema"] == kStudySchema);
  CHECK(j.contains("rate_curves"));
  const Run progress = run({"simulate", cfg.string()});
  CHECK(progress.err.find("simulate: 30/30") != std::string::npos);

  write_file(cfg, "replicates = 0\n");
  CHECK(run({"simulate", cfg.string(), "-q"}).code == cli::kExitError);
}

TEST_CASE("cli: wscatter") {
  const Run r = run({"wscatter", "-n", "40", "--reps", "20", "--seed", "8"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(r.out.rfind("W,Wp,branch", 0) == 0);
  CHECK(run({"wscatter", "-n", "40", "--reps", "20", "--seed", "8"}).out == r.out);
}
