#include <doctest.h>

#include <cmath>

#include "respira/errors.hpp"
#include "respira/nca.hpp"
#include "respira/rng.hpp"

using namespace respira;

namespace {

Eigen::VectorXd fd_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& w, double lambda,
                            double h = 1e-6) {
  Eigen::VectorXd g(w.size()), dummy;
  for (int k = 0; k < w.size(); ++k) {
    Eigen::VectorXd wp = w, wm = w;
    wp[k] += h;
    wm[k] -= h;
    const double fp = reg::nca_value_and_grad(X, y, wp, lambda, dummy);
    const double fm = reg::nca_value_and_grad(X, y, wm, lambda, dummy);
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_SUITE("nca") {

TEST_CASE("analytic gradient matches central finite differences on 8x3 data") {
  Rng rng(1);
  for (int rep = 0; rep < 3; ++rep) {
    Eigen::MatrixXd X(8, 3);
    Eigen::VectorXd y(8);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
      y[i] = rng.normal();
    }
    Eigen::VectorXd w(3);
    w << 0.8, 1.2, 0.4;
    Eigen::VectorXd grad;
    const double f = reg::nca_value_and_grad(X, y, w, 0.125, grad);
    CHECK(std::isfinite(f));
    const Eigen::VectorXd fd = fd_gradient(X, y, w, 0.125);
    for (int k = 0; k < 3; ++k) {
      const double denom = std::max(1e-8, std::fabs(fd[k]));
      CHECK(std::fabs(grad[k] - fd[k]) / denom < 1e-4);
    }
  }
}

TEST_CASE("zero weights make every neighbor equally likely: prediction is mean(y)") {
  Rng rng(2);
  Eigen::MatrixXd X(9, 2);
  Eigen::VectorXd y(9);
  for (int i = 0; i < 9; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y[i] = rng.normal(10.0, 2.0);
  }
  reg::NcaModel model;
  model.scaler = reg::Standardizer::fit(X);
  model.train = model.scaler.apply(X);
  model.y = y;
  model.weights = Eigen::VectorXd::Zero(2);
  Eigen::RowVectorXd probe(2);
  probe << 0.5, -0.2;
  const auto p = model.neighbor_probabilities(probe);
  for (int s = 0; s < 9; ++s) CHECK(p[s] == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
  CHECK(model.predict(probe) == doctest::Approx(y.mean()).epsilon(1e-12));
}

TEST_CASE("huge weights collapse onto the nearest training point") {
  Eigen::MatrixXd X(5, 1);
  Eigen::VectorXd y(5);
  for (int i = 0; i < 5; ++i) {
    X(i, 0) = static_cast<double>(i);
    y[i] = 10.0 * i;
  }
  reg::NcaModel model;
  model.scaler = reg::Standardizer::fit(X);
  model.train = model.scaler.apply(X);
  model.y = y;
  model.weights = Eigen::VectorXd::Constant(1, 40.0);
  Eigen::RowVectorXd probe(1);
  probe << 3.0;  // exactly training point 3
  CHECK(model.predict(probe) == doctest::Approx(30.0).epsilon(1e-6));
}

TEST_CASE("neighbor probabilities sum to one") {
  Rng rng(3);
  Eigen::MatrixXd X(12, 3);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
    y[i] = rng.normal();
  }
  const auto model = reg::fit_nca(X, y);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::RowVectorXd probe(3);
    probe << rng.normal(), rng.normal(), rng.normal();
    CHECK(model.neighbor_probabilities(probe).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("a feature that alone drives the response earns the larger weight") {
  Rng rng(4);
  const int n = 50;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y[i] = 4.0 * X(i, 0) + 0.05 * rng.normal();
  }
  const auto model = reg::fit_nca(X, y);
  CHECK(std::fabs(model.weights[0]) > std::fabs(model.weights[1]));
}

TEST_CASE("loss history is non-increasing and training helps") {
  Rng rng(5);
  const int n = 40;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y[i] = 2.0 * X(i, 0) + 0.1 * rng.normal();
  }
  const auto model = reg::fit_nca(X, y);
  REQUIRE(model.loss_history.size() >= 2);
  for (std::size_t k = 1; k < model.loss_history.size(); ++k)
    CHECK(model.loss_history[k] <= model.loss_history[k - 1] + 1e-12);
  CHECK(model.loss_history.back() < model.loss_history.front());
}

TEST_CASE("hard-neighbor mode returns a training response verbatim") {
  Rng rng(6);
  Eigen::MatrixXd X(10, 2);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y[i] = rng.normal();
  }
  reg::NcaOptions opt;
  opt.hard_neighbor = true;
  const auto model = reg::fit_nca(X, y, opt);
  Eigen::RowVectorXd probe(2);
  probe << 0.0, 0.0;
  const double pred = model.predict(probe);
  bool found = false;
  for (int i = 0; i < 10; ++i) found |= pred == y[i];
  CHECK(found);
}

TEST_CASE("too few samples throws") {
  Eigen::MatrixXd X(3, 1);
  X.setRandom();
  Eigen::VectorXd y(3);
  y.setRandom();
  CHECK_THROWS_AS(reg::fit_nca(X, y), TooFewSamples);
}

}  // TEST_SUITE
