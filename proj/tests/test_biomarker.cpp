#include <doctest.h>

#include <cmath>
#include <numeric>

#include "respira/biomarker.hpp"
#include "respira/errors.hpp"
#include "respira/rng.hpp"

using namespace respira;

namespace {

reg::TrainedRegressor glm_with_beta(const std::vector<double>& beta) {
  reg::GlmModel m;
  const int d = static_cast<int>(beta.size());
  m.scaler.mean = Eigen::VectorXd::Zero(d);
  m.scaler.stddev = Eigen::VectorXd::Ones(d);
  m.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), d);
  return reg::TrainedRegressor(std::move(m));
}

}  // namespace

TEST_SUITE("biomarker") {

TEST_CASE("GLM weights normalize on absolute coefficients") {
  const auto model = glm_with_beta({3.0, -1.0});
  const auto fw = biomarker::feature_weights(model);
  REQUIRE(fw.w.size() == 2);
  CHECK(fw.w[0] == doctest::Approx(0.75));
  CHECK(fw.w[1] == doctest::Approx(0.25));
}

TEST_CASE("SVR is not rankable") {
  reg::SvrModel m;
  m.scaler.mean = Eigen::VectorXd::Zero(2);
  m.scaler.stddev = Eigen::VectorXd::Ones(2);
  m.support = Eigen::MatrixXd::Zero(1, 2);
  m.dual_coef = Eigen::VectorXd::Zero(1);
  const reg::TrainedRegressor model(std::move(m));
  CHECK(!model.rankable());
  CHECK_THROWS_AS(biomarker::feature_weights(model), UnsupportedFamily);
}

TEST_CASE("merge_stats adds the mean and std branches") {
  std::vector<double> w20(20, 1.0 / 20.0);
  auto wm = biomarker::merge_stats(w20);
  REQUIRE(wm.size() == 10);
  for (double v : wm) CHECK(v == doctest::Approx(0.1));

  std::vector<double> spiked(20, 0.0);
  spiked[0] = 1.0;  // all mass on r_mag_mean
  wm = biomarker::merge_stats(spiked);
  CHECK(wm[0] == doctest::Approx(1.0));
  for (int p = 1; p < 10; ++p) CHECK(wm[static_cast<std::size_t>(p)] == 0.0);

  // additivity: sums agree
  Rng rng(1);
  std::vector<double> w(20);
  for (auto& v : w) v = rng.uniform();
  const auto merged = biomarker::merge_stats(w);
  CHECK(std::accumulate(merged.begin(), merged.end(), 0.0) ==
        doctest::Approx(std::accumulate(w.begin(), w.end(), 0.0)).epsilon(1e-12));

  CHECK_THROWS_AS(biomarker::merge_stats(std::vector<double>(7, 0.1)), LayoutMismatch);
}

TEST_CASE("default cluster map partitions the ten parameters") {
  CHECK(biomarker::ClusterMap::defaults().is_partition(10));
}

TEST_CASE("cluster_biomarkers: uniform weights give 20% each") {
  const std::vector<double> wm(10, 0.1);
  const auto rel = biomarker::cluster_biomarkers(wm);
  double sum = 0.0;
  for (double v : rel.rel) {
    CHECK(v == doctest::Approx(20.0));
    sum += v;
  }
  CHECK(sum == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("all mass on bpm puts RR at 100%") {
  std::vector<double> wm(10, 0.0);
  wm[7] = 0.7;  // bpm
  const auto rel = biomarker::cluster_biomarkers(wm);
  CHECK(rel.rel[4] == doctest::Approx(100.0));
  for (int b = 0; b < 4; ++b) CHECK(rel.rel[static_cast<std::size_t>(b)] == 0.0);
}

TEST_CASE("contextual relevance averages the bank's rankable models") {
  // two GLMs whose relevance lands fully on one biomarker each
  std::vector<double> beta_rh(20, 0.0);
  beta_rh[0] = 1.0;  // r_mag_mean -> Rh
  std::vector<double> beta_rr(20, 0.0);
  beta_rr[14] = 1.0;  // bpm_mean -> RR
  const auto m1 = glm_with_beta(beta_rh);
  const auto m2 = glm_with_beta(beta_rr);
  const auto rel = biomarker::contextual_relevance({&m1, &m2}, "run");
  CHECK(rel.rel[0] == doctest::Approx(50.0));
  CHECK(rel.rel[4] == doctest::Approx(50.0));
  CHECK(rel.context == "run");

  // single-model bank equals that model's relevance
  const auto solo = biomarker::contextual_relevance({&m1}, "run");
  CHECK(solo.rel[0] == doctest::Approx(100.0));

  // a bank with only SVR has nothing to rank
  reg::SvrModel svr;
  svr.scaler.mean = Eigen::VectorXd::Zero(20);
  svr.scaler.stddev = Eigen::VectorXd::Ones(20);
  svr.support = Eigen::MatrixXd::Zero(1, 20);
  svr.dual_coef = Eigen::VectorXd::Zero(1);
  const reg::TrainedRegressor only_svr(std::move(svr));
  CHECK_THROWS_AS(biomarker::contextual_relevance({&only_svr}, "run"),
                  NoRankableModels);
}

TEST_CASE("relevance sums to 100 within 1e-6 for random weights") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w20(20);
    for (auto& v : w20) v = rng.uniform();
    const auto rel = biomarker::cluster_biomarkers(biomarker::merge_stats(w20));
    double sum = 0.0;
    for (double v : rel.rel) sum += v;
    CHECK(std::fabs(sum - 100.0) <= 1e-6);
  }
}

TEST_CASE("relevance argmax is invariant to positive rescaling of raw weights") {
  Rng rng(3);
  std::vector<double> beta(20);
  for (auto& v : beta) v = rng.normal();
  const auto a = biomarker::feature_weights(glm_with_beta(beta));
  std::vector<double> scaled(beta);
  for (auto& v : scaled) v *= 37.5;
  const auto b = biomarker::feature_weights(glm_with_beta(scaled));
  for (std::size_t i = 0; i < a.w.size(); ++i)
    CHECK(a.w[i] == doctest::Approx(b.w[i]).epsilon(1e-12));
}

}  // TEST_SUITE
