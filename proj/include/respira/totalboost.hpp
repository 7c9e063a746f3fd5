#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "respira/split_select.hpp"

namespace respira::tboost {

struct TreeNode {
  int feature = -1;          // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  std::vector<double> scores;  // leaf only: per-class scores
};

struct ShallowTree {
  std::vector<TreeNode> nodes;
  int n_splits = 0;

  const std::vector<double>& scores_at(const Eigen::RowVectorXd& x) const;
  int predict_class(const Eigen::RowVectorXd& x) const;
};

// Weighted-Gini shallow tree (best-first growth, at most opt.max_splits
// internal splits). Split predictors come from the chi-square curvature and
// interaction tests. Leaf scores are the weighted class proportions.
struct TreeOptions {
  int max_splits = 5;
  split::SelectOptions select;
};
ShallowTree train_tree(const Eigen::MatrixXd& X, const std::vector<int>& y,
                       const std::vector<double>& weights, int n_classes,
                       const TreeOptions& opt = {});

struct ContextPosterior {
  std::vector<double> p;
  int argmax() const;
};

struct TotalBoostEnsemble {
  std::vector<std::string> classes;
  std::vector<ShallowTree> trees;     // leaf scores are +-1 votes on the
                                      // tree's one-vs-rest class slot
  std::vector<double> tree_weights;   // simplex per one-vs-rest run
};

struct TrainOptions {
  int max_iter = 200;
  double margin_precision = 0.01;  // v
  TreeOptions tree;
  double projection_tol = 1e-8;
  int max_projection_passes = 10000;
  bool track_diagnostics = false;  // record d / edges / margin per iteration
};

struct IterationDiag {
  double edge = 0;        // of the new hypothesis on the pre-update weights
  double gamma_hat = 0;   // running minimum edge
  double margin = 0;      // LP max-min margin over hypotheses so far
  std::vector<double> distribution;      // d after the corrective update
  std::vector<double> constraint_edges;  // sum_i d_i u_i^q for q <= t
};

struct ClassRunDiag {
  std::string class_label;
  std::vector<IterationDiag> iterations;
  bool stopped_infeasible = false;
  bool stopped_weak = false;
};

struct TrainDiagnostics {
  std::vector<ClassRunDiag> runs;
};

// One-vs-rest TotalBoost per class; requires >= 2 classes with >= 2 samples
// each (InsufficientData otherwise).
TotalBoostEnsemble totalboost_train(const Eigen::MatrixXd& X,
                                    const std::vector<std::string>& y,
                                    const TrainOptions& opt = {},
                                    TrainDiagnostics* diag = nullptr);

// Per-class weighted votes mapped to a distribution by linear vote shares:
// p_m = (s_m + 1) / sum_k (s_k + 1), uniform when all votes are at -1.
ContextPosterior predict_posterior(const TotalBoostEnsemble& ens,
                                   const Eigen::RowVectorXd& x);

std::string to_json(const TotalBoostEnsemble& ens);
TotalBoostEnsemble ensemble_from_json(const std::string& text);

// Entropy projection of the uniform distribution onto the intersection of
// the half-spaces {d : sum_i d_i u_i^q <= cap} (Bregman cyclic projections
// with nonnegative multipliers). Exposed for tests; u rows hold the
// confidence-rated votes in [-1, 1].
struct ProjectionResult {
  bool feasible = false;
  std::vector<double> d;
};
ProjectionResult entropy_project(const std::vector<std::vector<double>>& u,
                                 double cap, double tol, int max_passes);

}  // namespace respira::tboost
