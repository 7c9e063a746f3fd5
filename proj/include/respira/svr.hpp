#pragma once

#include <vector>

#include <Eigen/Dense>

#include "respira/standardize.hpp"

namespace respira::reg {

struct SvrOptions {
  double kkt_tol = 1e-6;   // feasibility gap at convergence
  long max_iterations = 2000000;
};

// epsilon-SVR with the fixed-width Gaussian kernel G(a,b) = exp(-||a-b||^2)
// on standardized features. epsilon = iqr(y) / 13.49 and C = 10 * epsilon,
// both derived from the response distribution at fit time; solved by SMO on
// the maximal KKT-violating pair.
struct SvrModel {
  Standardizer scaler;
  Eigen::MatrixXd support;     // standardized training inputs
  Eigen::VectorXd dual_coef;   // alpha_i - alpha_i*
  double bias = 0.0;
  double epsilon = 0.0, box_c = 0.0;
  double kkt_gap = 0.0;        // violation at termination

  double predict(const Eigen::RowVectorXd& x) const;
};

SvrModel fit_svr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const SvrOptions& opt = {});

// Dual objective 0.5 b'Gb + eps*sum|b| - y'b for oracle comparisons.
double svr_dual_objective(const Eigen::MatrixXd& G, const Eigen::VectorXd& beta,
                          const Eigen::VectorXd& y, double epsilon);

}  // namespace respira::reg
