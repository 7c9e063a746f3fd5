#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "respira/standardize.hpp"

namespace respira::reg {

struct GprOptions {
  int restarts = 5;          // random restarts of the hyperparameter search
  int max_iterations = 120;  // L-BFGS iterations per restart
  double restart_scale = 0.5;
  std::uint64_t seed = 1;
  double jitter_max_rel = 1e-6;  // relative to the signal variance
};

// Exact Gaussian process regression with the ARD Matern kernel
//   k(a,b) = sigma_s^2 (1 + sqrt(3 m)) exp(-sqrt(3 m)),
//   m = sum_r (a_r - b_r)^2 / sigma_r^2,
// a linear basis h(x) = [1 x] whose coefficients are profiled out by GLS,
// and homoscedastic noise. Hyperparameters are optimized in log space by
// maximizing the profiled log marginal likelihood.
struct GprModel {
  Standardizer scaler;
  Eigen::MatrixXd train;      // standardized inputs
  Eigen::VectorXd y;
  Eigen::VectorXd theta;      // log(sigma_s^2), log(sigma_r^2) x d, log(sigma^2)
  Eigen::VectorXd basis_coef; // profiled beta for h(x) = [1 x]
  Eigen::VectorXd alpha;      // K_y^{-1} (y - H beta)
  Eigen::MatrixXd ky_inv;
  double jitter = 0.0;        // diagonal stabilizer used by the final solve
  double log_marginal = 0.0;  // at the optimum
  std::vector<double> lml_history;  // accepted optimizer values, non-decreasing

  double predict(const Eigen::RowVectorXd& x) const;
  struct Prediction {
    double mean = 0, variance = 0;
  };
  Prediction predict_with_variance(const Eigen::RowVectorXd& x) const;

  double signal_var() const { return std::exp(theta[0]); }
  double noise_var() const { return std::exp(theta[theta.size() - 1]); }
  double length_scale_var(int r) const { return std::exp(theta[1 + r]); }
};

GprModel fit_gpr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const GprOptions& opt = {});

// Profiled negative log marginal likelihood and its gradient in theta
// (log-space). Exposed so tests can check the gradient against finite
// differences. X must already be standardized.
double gpr_value_and_grad(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& theta, Eigen::VectorXd& grad);

// ARD relevance exp(-z_r) with z_r the min-max normalized log length scale;
// uniform when all length scales agree.
std::vector<double> gpr_ard_relevance(const GprModel& model);

// Recomputes basis_coef / alpha / ky_inv from train, y, theta and jitter
// (after deserialization). Throws IllConditionedKernel on failure.
void gpr_refit_cache(GprModel& model);

}  // namespace respira::reg
