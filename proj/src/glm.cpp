#include "respira/glm.hpp"

#include <cmath>

#include "respira/errors.hpp"

namespace respira::reg {

double glm_objective(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& y,
                     double intercept, const Eigen::VectorXd& beta,
                     double lambda, double alpha) {
  const auto n = static_cast<double>(Xs.rows());
  const Eigen::VectorXd r =
      y - (Xs * beta).array().matrix() - Eigen::VectorXd::Constant(Xs.rows(), intercept);
  return r.squaredNorm() / n + lambda * (1.0 - alpha) / 2.0 * beta.squaredNorm() +
         lambda * alpha * beta.lpNorm<1>();
}

GlmModel fit_glm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const GlmOptions& opt) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (n < 2) throw TooFewSamples("fit_glm needs n >= 2");
  if (y.size() != n) throw DimensionMismatch("fit_glm: |y| != rows(X)");

  GlmModel model;
  model.alpha = opt.alpha;
  model.lambda = opt.lambda < 0 ? 1.0 / std::sqrt(static_cast<double>(n)) : opt.lambda;
  model.scaler = Standardizer::fit(X);
  const Eigen::MatrixXd Xs = model.scaler.apply(X);

  // Columns are mean-zero, so the unpenalized intercept decouples as the
  // response mean and the descent runs on centered residuals.
  model.intercept = y.mean();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd resid = y - Eigen::VectorXd::Constant(n, model.intercept);

  const double nn = static_cast<double>(n);
  Eigen::VectorXd col_sq(d);
  for (int j = 0; j < d; ++j) col_sq[j] = Xs.col(j).squaredNorm() / nn;

  const double l1 = model.lambda * model.alpha;
  const double l2 = model.lambda * (1.0 - model.alpha);

  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (int j = 0; j < d; ++j) {
      if (col_sq[j] <= 0) continue;
      const double old = beta[j];
      // z = (2/n) x_j' r with beta_j folded back into the residual.
      const double z = 2.0 * (Xs.col(j).dot(resid) / nn + col_sq[j] * old);
      const double denom = 2.0 * col_sq[j] + l2;
      double next = 0.0;
      if (z > l1)
        next = (z - l1) / denom;
      else if (z < -l1)
        next = (z + l1) / denom;
      const double delta = next - old;
      if (delta != 0.0) {
        resid -= delta * Xs.col(j);
        beta[j] = next;
        max_delta = std::max(max_delta, std::fabs(delta));
      }
    }
    model.objective_history.push_back(
        glm_objective(Xs, y, model.intercept, beta, model.lambda, model.alpha));
    if (max_delta < opt.tol) break;
  }

  model.beta = std::move(beta);
  return model;
}

double GlmModel::predict(const Eigen::RowVectorXd& x) const {
  return intercept + scaler.apply(x).dot(beta);
}

}  // namespace respira::reg
