#pragma once

#include <vector>

#include <Eigen/Dense>

#include "respira/standardize.hpp"

namespace respira::reg {

struct GlmOptions {
  double alpha = 0.5;      // elastic-net mixing
  double lambda = -1.0;    // < 0 -> 1/sqrt(n)
  double tol = 1e-8;       // max coefficient change per sweep
  int max_sweeps = 100000;
};

// Identity-link Gaussian GLM with elastic-net penalty, fitted by cyclic
// coordinate descent on standardized features:
//   (1/n)*RSS + lambda*(1-alpha)/2*||beta||_2^2 + lambda*alpha*||beta||_1
// with an unpenalized intercept.
struct GlmModel {
  Standardizer scaler;
  double intercept = 0.0;        // in standardized feature space
  Eigen::VectorXd beta;          // standardized-space coefficients
  double lambda = 0.0, alpha = 0.5;
  std::vector<double> objective_history;  // per sweep, non-increasing

  double predict(const Eigen::RowVectorXd& x) const;
};

GlmModel fit_glm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const GlmOptions& opt = {});

// Objective value at (intercept, beta) in standardized space; shared by the
// fitter and by oracle checks.
double glm_objective(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& y,
                     double intercept, const Eigen::VectorXd& beta,
                     double lambda, double alpha);

}  // namespace respira::reg
