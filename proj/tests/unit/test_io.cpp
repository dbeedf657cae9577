#include <doctest.h>

#include <sstream>

#include "skewpen/io.hpp"

using namespace skewpen;

namespace {

std::string csv_error(const std::string& text) {
  std::istringstream in(text);
  try {
    read_csv(in, "data.csv");
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("CSV reading") {
  std::istringstream a("y1,y2\n1,2\n3.5, 4e-1\n\n-1,0\n");
  const Dataset d = read_csv(a);
  CHECK(d.n() == 3);
  CHECK(d.d() == 2);
  CHECK(d.rows()(1, 1) == doctest::Approx(0.4));

  std::istringstream b("0.5\n1.5\r\n2.5\n");
  CHECK(read_csv(b).n() == 3);

  CHECK(csv_error("y\n1\n2\nabc\n").find("line 4") != std::string::npos);
  CHECK(csv_error("y\n1\n2\nabc\n").find("data.csv") != std::string::npos);
  CHECK(csv_error("a,b\n1,2\n3\n").find("line 3") != std::string::npos);
  CHECK(csv_error("1\nnan\n").find("line 2") != std::string::npos);
  CHECK(csv_error("y\n1,\n").find("line 2") != std::string::npos);
  CHECK_FALSE(csv_error("header only\n").empty());
  CHECK_FALSE(csv_error("").empty());
  CHECK_THROWS(read_csv_file("/nonexistent/file.csv"));
}

TEST_CASE("CSV round trip keeps full precision") {
  const Dataset d = sample(DirectParams::scalar(0, 1, 3), 25, 8);
  std::ostringstream out;
  write_csv(out, d, {"y"});
  std::istringstream in(out.str());
  const Dataset e = read_csv(in);
  REQUIRE(e.n() == 25);
  CHECK((e.rows() - d.rows()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit JSON carries a schema") {
  FitResult f;
  f.method = Method::MLE;
  f.estimates = DirectParams::scalar(0.1, 2.0, 100.0);
  f.loglik_at_opt = -12.5;
  f.diverged = true;
  f.divergence_rule = "|alpha| above the divergence threshold";
  f.param_names = {"xi", "omega", "alpha"};
  f.stderr_note = "diverged";
  const auto j = fit_to_json(f);
  CHECK(j["schema"] == kFitSchema);
  CHECK(j["method"] == "MLE");
  CHECK(j["diverged"] == true);
  CHECK(j["estimates"]["alpha"] == 100.0);
  CHECK(j["stderr"].is_null());
  CHECK(j["penalized_loglik"].is_null());

  f.std_errors = Eigen::Vector3d(0.1, 0.2, 0.3);
  f.diverged = false;
  CHECK(fit_to_json(f)["stderr"]["omega"] == 0.2);
}

TEST_CASE("summary CSV is long format") {
  StudySummary s;
  SummaryRow r;
  r.estimator = "MPLE";
  r.parameter = "alpha";
  r.n = 50;
  r.mean_bias = -1.5;
  r.std_dev = std::nan("");
  s.rows.push_back(r);
  std::ostringstream out;
  summary_to_csv(out, s);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "estimator,parameter,n,statistic,value");
  std::getline(in, line);
  CHECK(line == "MPLE,alpha,50,mean_bias,-1.5");
  CHECK(out.str().find("MPLE,alpha,50,std_dev,NA") != std::string::npos);
}
