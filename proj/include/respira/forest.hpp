#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "respira/split_select.hpp"
#include "respira/standardize.hpp"

namespace respira::reg {

struct RfOptions {
  int n_trees = 200;
  int min_leaf = 10;
  int mtry = -1;  // < 0 -> ceil(d / 3)
  int response_bins = 4;
  std::uint64_t seed = 1;
  split::SelectOptions select;
};

struct RfNode {
  int feature = -1;  // leaf when < 0
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;
};

struct RfTree {
  std::vector<RfNode> nodes;
  std::vector<int> oob;  // out-of-bag row indices of the training set
  double predict(const Eigen::RowVectorXd& x) const;
};

// Regression forest: N-of-N bootstrap per tree, MSE thresholds on the
// chi-square-selected predictor (response quartile-binned for the tests),
// deep growth with >= min_leaf observations per leaf.
struct RfModel {
  Standardizer scaler;
  std::vector<RfTree> trees;
  std::vector<double> oob_importance;  // permutation importance, clamped at 0

  double predict(const Eigen::RowVectorXd& x) const;
};

RfModel fit_rf(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               const RfOptions& opt = {});

// Mean over trees of (OOB MSE with feature r permuted - OOB MSE), >= 0.
std::vector<double> rf_oob_importance(const RfModel& model);

}  // namespace respira::reg
