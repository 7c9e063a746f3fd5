#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace respira::optim {

// Objective callback: returns f(x) and fills grad (same size as x).
using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct LbfgsOptions {
  int max_iterations = 200;
  int history = 8;
  double grad_tol = 1e-7;       // stop on ||g||_inf below this
  double step_tol = 1e-12;      // stop when the accepted step is tiny
  int max_line_search = 50;
  double armijo_c1 = 1e-4;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> f_history;  // accepted objective values, monotone
};

// Limited-memory BFGS with Armijo backtracking. Curvature pairs with
// non-positive y's are skipped, which keeps the inverse-Hessian estimate
// positive definite without a strong-Wolfe search.
LbfgsResult lbfgs_minimize(const ObjectiveFn& fn, Eigen::VectorXd x0,
                           const LbfgsOptions& opt = {});

}  // namespace respira::optim
