#include "respira/standardize.hpp"

#include "respira/errors.hpp"

namespace respira::reg {

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  Standardizer s;
  const auto n = static_cast<double>(X.rows());
  if (n < 1) throw TooFewSamples("standardizer needs at least one row");
  s.mean = X.colwise().mean();
  s.stddev.resize(X.cols());
  for (int j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.mean[j]).square().sum() / n;
    s.stddev[j] = std::max(std::sqrt(var), 1e-12);
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size())
    throw DimensionMismatch("standardizer dimension mismatch");
  return (X.rowwise() - mean.transpose()).array().rowwise() /
         stddev.transpose().array();
}

Eigen::RowVectorXd Standardizer::apply(const Eigen::RowVectorXd& x) const {
  if (x.size() != mean.size())
    throw DimensionMismatch("standardizer dimension mismatch");
  return (x - mean.transpose()).array() / stddev.transpose().array();
}

}  // namespace respira::reg
