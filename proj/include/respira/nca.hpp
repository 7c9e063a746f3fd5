#pragma once

#include <vector>

#include <Eigen/Dense>

#include "respira/standardize.hpp"

namespace respira::reg {

struct NcaOptions {
  double lambda = -1.0;  // < 0 -> 1/n
  int max_iterations = 200;
  bool hard_neighbor = false;  // predict with the single nearest neighbor
};

// Neighborhood component analysis for regression: learns per-feature
// weights of the distance D_w(a,b) = sum_r w_r^2 |a_r - b_r| by minimizing
// the expected leave-one-out MAE under the stochastic-neighbor rule
//   p_ij = exp(-D_w(x_i,x_j)) / sum_{k != i} exp(-D_w(x_i,x_k)),
// plus lambda * sum_r w_r^2. Prediction is the neighbor expectation
// sum_s p_ts y_s (or the argmax neighbor in hard mode).
struct NcaModel {
  Standardizer scaler;
  Eigen::MatrixXd train;  // standardized inputs
  Eigen::VectorXd y;
  Eigen::VectorXd weights;
  double lambda = 0.0;
  bool hard_neighbor = false;
  std::vector<double> loss_history;  // accepted values, non-increasing

  double predict(const Eigen::RowVectorXd& x) const;
  // Neighbor distribution over the stored training set for a test point.
  Eigen::VectorXd neighbor_probabilities(const Eigen::RowVectorXd& x) const;
};

NcaModel fit_nca(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const NcaOptions& opt = {});

// Regularized leave-one-out MAE and gradient in w. X must be standardized.
double nca_value_and_grad(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& w, double lambda,
                          Eigen::VectorXd& grad);

}  // namespace respira::reg
