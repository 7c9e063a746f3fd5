#pragma once

#include <Eigen/Dense>

namespace respira::reg {

// Per-feature z-scoring, fitted on training data and applied identically at
// prediction time. Stored with every model so serialized bundles are
// self-contained.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;  // floored at 1e-12

  static Standardizer fit(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
  Eigen::RowVectorXd apply(const Eigen::RowVectorXd& x) const;
  int dim() const { return static_cast<int>(mean.size()); }
};

}  // namespace respira::reg
