#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "skewpen/montecarlo.hpp"
#include "skewpen/parallel.hpp"

using namespace skewpen;

TEST_CASE("type-8 quantiles by hand") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  CHECK(quantile_type8(a, 0.5) == doctest::Approx(3.0));
  CHECK(quantile_type8(a, 0.25) == doctest::Approx(5.0 / 3.0));
  CHECK(quantile_type8(a, 0.75) == doctest::Approx(13.0 / 3.0));
  // h = 16/3 p + 1/3: p = 1/4 gives 5/3, p = 3/4 gives 13/3
  const std::vector<double> b{2, 3, 5, 7, 11};
  CHECK(quantile_type8(b, 0.25) == doctest::Approx(2.0 + 2.0 / 3.0));
  CHECK(quantile_type8(b, 0.75) == doctest::Approx(7.0 + 4.0 / 3.0));
  const auto s = column_stats({11, 3, 7, 2, 5}, 4.0);
  CHECK(s.mean_bias == doctest::Approx(5.6 - 4.0));
  CHECK(s.median_bias == doctest::Approx(1.0));
  CHECK(s.iqr == doctest::Approx(17.0 / 3.0));
  CHECK(s.std_dev == doctest::Approx(std::sqrt(51.2 / 4.0)));
  CHECK(quantile_type8({4.0}, 0.3) == 4.0);
  CHECK(quantile_type8(a, 0.0) == 1.0);
  CHECK(quantile_type8(a, 1.0) == 5.0);
  CHECK_THROWS(quantile_type8({}, 0.5));
}

TEST_CASE("summaries of trivial lists") {
  const Eigen::Vector3d truth(0.0, 1.0, 5.0);
  const std::vector<std::string> names{"xi", "omega", "alpha"};
  std::vector<Eigen::VectorXd> same(7, Eigen::VectorXd(Eigen::Vector3d(0.5, 2.0, 3.0)));
  const auto rows = summarize(same, std::vector<bool>(7, false), truth, names, 50, 1);
  for (const auto& r : rows) {
    CHECK(r.std_dev == 0.0);
    CHECK(r.iqr == 0.0);
    CHECK(r.se_mean_bias == 0.0);
    CHECK(r.replicates_used == 7);
    CHECK(r.divergence_proportion == 0.0);
  }
  CHECK(rows[2].mean_bias == doctest::Approx(-2.0));

  std::vector<Eigen::VectorXd> exact(4, Eigen::VectorXd(truth));
  for (const auto& r : summarize(exact, std::vector<bool>(4, false), truth, names)) {
    CHECK(r.mean_bias == 0.0);
    CHECK(r.median_bias == 0.0);
  }
  CHECK_THROWS(summarize({}, {}, truth, names));
}

TEST_CASE("divergence exclusion") {
  const Eigen::Vector2d truth(0.0, 5.0);
  const std::vector<std::string> names{"xi", "alpha"};
  std::vector<Eigen::VectorXd> est{Eigen::Vector2d(1, 4), Eigen::Vector2d(2, 6), Eigen::Vector2d(9, 100),
                                   Eigen::Vector2d(3, 5)};
  const std::vector<bool> div{false, false, true, false};
  const auto whole = summarize(est, div, truth, names);
  CHECK(whole[0].replicates_used == 3);
  CHECK(whole[1].replicates_used == 3);
  CHECK(whole[0].mean_bias == doctest::Approx(2.0));
  CHECK(whole[1].divergence_proportion == doctest::Approx(0.25));
  const auto alpha_only = summarize(est, div, truth, names, 0, 0, {false, true});
  CHECK(alpha_only[0].replicates_used == 4);
  CHECK(alpha_only[0].mean_bias == doctest::Approx(15.0 / 4.0));
  CHECK(alpha_only[1].replicates_used == 3);
  CHECK(alpha_only[1].mean_bias == doctest::Approx(0.0));
  const auto none = summarize(std::vector<Eigen::VectorXd>(2, Eigen::VectorXd(Eigen::Vector2d(0, 100))),
                              {true, true}, truth, names);
  CHECK(none[1].replicates_used == 0);
  CHECK(std::isnan(none[1].mean_bias));
  CHECK(none[1].divergence_proportion == 1.0);
}

TEST_CASE("adjacent replicate streams do not collide") {
  constexpr std::size_t kDraws = 1000000;
  std::vector<std::uint64_t> v;
  v.reserve(2 * kDraws);
  for (std::uint64_t rep : {0ULL, 1ULL}) {
    std::mt19937_64 rng(replicate_seed(1, 50, rep));
    for (std::size_t i = 0; i < kDraws; ++i) v.push_back(rng());
  }
  std::sort(v.begin(), v.end());
  CHECK(std::adjacent_find(v.begin(), v.end()) == v.end());
  CHECK(replicate_seed(1, 50, 0) != replicate_seed(1, 50, 1));
  CHECK(replicate_seed(1, 50, 0) != replicate_seed(1, 100, 0));
  CHECK(replicate_seed(1, 50, 0) != replicate_seed(2, 50, 0));
}

TEST_CASE("config parsing") {
  std::istringstream in(R"(# comment
family = sn
model = one_parameter
alpha = 3   # trailing comment
sample_sizes = 20, 40
estimators = all
replicates = 12
base_seed = 99
bootstrap = 0
)");
  const auto c = parse_study_config(in);
  CHECK(c.one_parameter);
  CHECK(c.true_params.alpha[0] == 3.0);
  CHECK(c.sample_sizes == std::vector<std::size_t>{20, 40});
  CHECK(c.estimators.size() == 4);
  CHECK(c.replicates == 12);
  CHECK(c.base_seed == 99);
  CHECK(c.mle_exclusion == StudyConfig::MleExclusion::all_parameters);
  CHECK(c.wbar_on_diverged == StudyConfig::WbarOnDiverged::unavailable);

  auto error_of = [](const std::string& text) {
    std::istringstream s(text);
    try {
      parse_study_config(s);
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("family = sn\nbogus = 1\n").find("line 2") != std::string::npos);
  CHECK(error_of("replicates = -3\n").find("line 1") != std::string::npos);
  CHECK(error_of("alpha 5\n").find("line 1") != std::string::npos);
  CHECK_FALSE(error_of("replicates = 0\n").empty());
  CHECK_FALSE(error_of("estimators = sf\n").empty());  // SF needs the one-parameter model
  CHECK_FALSE(error_of("family = st\nnu = -1\n").empty());
  CHECK_FALSE(error_of("estimators = bayes\n").empty());
  CHECK(error_of("mle_exclusion = alpha_only\nwbar_on_diverged = clamped\n").empty());
}

TEST_CASE("studies are deterministic and thread-count independent") {
  StudyConfig c;
  c.sample_sizes = {30, 60};
  c.estimators = {Method::MLE, Method::MPLE, Method::WBAR};
  c.replicates = 24;
  c.base_seed = 5;
  c.bootstrap = 20;
  c.threads = 1;
  const auto a = run_study(c);
  c.threads = 3;
  std::size_t calls = 0;
  const auto b = run_study(c, [&](std::size_t, std::size_t total) {
    ++calls;
    CHECK(total == 48);
  });
  CHECK(calls == 48);
  REQUIRE(a.summary.rows.size() == b.summary.rows.size());
  CHECK(a.summary.rows.size() == 2 * 3 * 3);
  for (std::size_t i = 0; i < a.summary.rows.size(); ++i) {
    const auto &x = a.summary.rows[i], &y = b.summary.rows[i];
    CHECK(x.estimator == y.estimator);
    CHECK(x.parameter == y.parameter);
    CHECK(x.mean_bias == y.mean_bias);
    CHECK(x.median_bias == y.median_bias);
    CHECK(x.std_dev == y.std_dev);
    CHECK(x.iqr == y.iqr);
    CHECK(x.se_iqr == y.se_iqr);
    CHECK(x.replicates_used == y.replicates_used);
  }
  for (const auto& r : a.summary.rows) {
    CHECK(r.failures == 0);
    if (r.estimator == "MPLE") CHECK(r.replicates_used == 24);
    CHECK(r.divergence_proportion >= 0.0);
    CHECK(r.divergence_proportion <= 1.0);
  }
  // W-bar exists exactly for the finite-MLE replicates
  for (std::size_t n : {30u, 60u}) {
    const auto* m = a.summary.find("MLE", "alpha", n);
    const auto* w = a.summary.find("WBAR", "alpha", n);
    REQUIRE(m);
    REQUIRE(w);
    CHECK(w->replicates_used == m->replicates_used);
  }
  CHECK(a.summary.metadata.count("quantiles") == 1);
}

TEST_CASE("one-parameter study with every estimator") {
  StudyConfig c;
  c.one_parameter = true;
  c.sample_sizes = {40};
  c.estimators = {Method::MLE, Method::MPLE, Method::SF, Method::WBAR};
  c.replicates = 30;
  c.bootstrap = 0;
  c.threads = 2;
  const auto r = run_study(c);
  CHECK(r.parameter_names == std::vector<std::string>{"alpha"});
  for (const char* e : {"MLE", "MPLE", "SF", "WBAR"}) CHECK(r.summary.find(e, "alpha", 40) != nullptr);
  CHECK(r.summary.find("SF", "alpha", 40)->replicates_used == 30);
}

TEST_CASE("rate-curve slope") {
  StudyResult s;
  s.config.one_parameter = true;
  s.config.estimators = {Method::MLE, Method::MPLE};
  s.config.sample_sizes = {50, 100, 400};
  for (std::size_t n : s.config.sample_sizes) {
    SummaryRow a;
    a.estimator = "MLE";
    a.parameter = "alpha";
    a.n = n;
    a.mean_bias = 10.0 / n;
    a.median_bias = a.std_dev = a.iqr = 1.0 / std::sqrt(n);
    a.replicates_used = 10;
    SummaryRow b = a;
    b.estimator = "MPLE";
    b.mean_bias = -100.0 / (double(n) * n);
    s.summary.rows.push_back(a);
    s.summary.rows.push_back(b);
  }
  const auto rc = rate_curves(s);
  CHECK(rc.mean_bias_slope.at("MLE") == doctest::Approx(-1.0));
  CHECK(rc.mean_bias_slope.at("MPLE") == doctest::Approx(-2.0));
  CHECK(rc.points.at("MLE").size() == 3);
  CHECK(rc.points.at("MLE")[1].log_sd == doctest::Approx(-0.5 * std::log(100.0)));
  s.config.one_parameter = false;
  CHECK_THROWS(rate_curves(s));
}
