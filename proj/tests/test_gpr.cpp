#include <doctest.h>

#include <cmath>

#include "respira/errors.hpp"
#include "respira/gpr.hpp"
#include "respira/rng.hpp"

using namespace respira;

namespace {

Eigen::VectorXd fd_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& theta, double h = 1e-5) {
  Eigen::VectorXd g(theta.size());
  Eigen::VectorXd dummy;
  for (int k = 0; k < theta.size(); ++k) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp[k] += h;
    tm[k] -= h;
    const double fp = reg::gpr_value_and_grad(X, y, tp, dummy);
    const double fm = reg::gpr_value_and_grad(X, y, tm, dummy);
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_SUITE("gpr") {

TEST_CASE("analytic gradient matches central finite differences on random 8x3 data") {
  Rng rng(1);
  for (int rep = 0; rep < 3; ++rep) {
    Eigen::MatrixXd X(8, 3);
    Eigen::VectorXd y(8);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
      y[i] = rng.normal();
    }
    Eigen::VectorXd theta(5);
    theta << std::log(1.3), std::log(0.8), std::log(1.5), std::log(0.6), std::log(0.4);

    Eigen::VectorXd grad;
    const double f = reg::gpr_value_and_grad(X, y, theta, grad);
    CHECK(std::isfinite(f));
    const Eigen::VectorXd fd = fd_gradient(X, y, theta);
    for (int k = 0; k < 5; ++k) {
      const double denom = std::max(1e-8, std::fabs(fd[k]));
      CHECK(std::fabs(grad[k] - fd[k]) / denom < 1e-4);
    }
  }
}

TEST_CASE("interpolation limit: tiny noise reproduces the training targets") {
  Rng rng(2);
  const int n = 12;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.uniform(-2, 2);
    X(i, 1) = rng.uniform(-2, 2);
    y[i] = std::sin(X(i, 0)) + 0.5 * X(i, 1);
  }
  // Freeze hyperparameters and evaluate the posterior mean at the training
  // points with the noise pinned near zero.
  reg::GprModel model;
  model.scaler = reg::Standardizer::fit(X);
  model.train = model.scaler.apply(X);
  model.y = y;
  model.theta.resize(4);
  model.theta << std::log(1.0), std::log(1.0), std::log(1.0), std::log(1e-10);
  model.jitter = 0.0;
  reg::gpr_refit_cache(model);
  for (int i = 0; i < n; ++i)
    CHECK(model.predict(X.row(i)) == doctest::Approx(y[i]).epsilon(1e-6));
}

TEST_CASE("prediction at a training point stays within two posterior sigmas") {
  Rng rng(3);
  const int n = 30;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y[i] = 2.0 * X(i, 0) - X(i, 1) + 0.05 * rng.normal();
  }
  reg::GprOptions opt;
  opt.restarts = 2;
  opt.max_iterations = 60;
  const auto model = reg::fit_gpr(X, y, opt);
  for (int i = 0; i < n; ++i) {
    const auto p = model.predict_with_variance(X.row(i));
    CHECK(std::fabs(p.mean - y[i]) <= 2.0 * std::sqrt(p.variance) + 1e-9);
  }
}

TEST_CASE("irrelevant feature earns a longer length scale and lower relevance") {
  Rng rng(4);
  const int n = 60;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y[i] = std::sin(1.5 * X(i, 0)) + 0.02 * rng.normal();  // x1 irrelevant
  }
  reg::GprOptions opt;
  opt.restarts = 3;
  opt.max_iterations = 80;
  const auto model = reg::fit_gpr(X, y, opt);
  CHECK(model.length_scale_var(1) > model.length_scale_var(0));
  const auto rel = reg::gpr_ard_relevance(model);
  CHECK(rel[1] < rel[0]);
}

TEST_CASE("log marginal likelihood never decreases across accepted steps") {
  Rng rng(5);
  const int n = 25;
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
    y[i] = X(i, 0) * X(i, 1) + 0.1 * rng.normal();
  }
  reg::GprOptions opt;
  opt.restarts = 1;
  const auto model = reg::fit_gpr(X, y, opt);
  REQUIRE(model.lml_history.size() >= 2);
  for (std::size_t k = 1; k < model.lml_history.size(); ++k)
    CHECK(model.lml_history[k] >= model.lml_history[k - 1] - 1e-9);
}

TEST_CASE("contract errors") {
  Eigen::MatrixXd X(3, 2);
  X.setRandom();
  Eigen::VectorXd y(3);
  y.setRandom();
  CHECK_THROWS_AS(reg::fit_gpr(X, y), TooFewSamples);
}

}  // TEST_SUITE
