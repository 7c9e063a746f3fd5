#include "respira/nca.hpp"

#include <cmath>

#include "respira/errors.hpp"
#include "respira/optim.hpp"

namespace respira::reg {

double nca_value_and_grad(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& w, double lambda,
                          Eigen::VectorXd& grad) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  grad = Eigen::VectorXd::Zero(d);

  Eigen::VectorXd w2(d);
  for (int r = 0; r < d; ++r) w2[r] = w[r] * w[r];

  double loss = 0.0;
  Eigen::VectorXd dist(n), p(n);
  Eigen::MatrixXd absdiff(n, d);
  for (int i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double acc = 0.0;
      for (int r = 0; r < d; ++r) {
        const double a = std::fabs(X(i, r) - X(j, r));
        absdiff(j, r) = a;
        acc += w2[r] * a;
      }
      dist[j] = acc;
      dmin = std::min(dmin, acc);
    }
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      p[j] = std::exp(-(dist[j] - dmin));
      z += p[j];
    }
    double li = 0.0;  // expected |y_i - y_j| under the neighbor rule
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      p[j] /= z;
      li += p[j] * std::fabs(y[i] - y[j]);
    }
    loss += li;

    // d li / d w_r = sum_j p_ij (li - |dy_ij|) dD_ij/dw_r,
    // dD_ij/dw_r = 2 w_r |x_ir - x_jr|.
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double factor = p[j] * (li - std::fabs(y[i] - y[j]));
      for (int r = 0; r < d; ++r)
        grad[r] += factor * 2.0 * w[r] * absdiff(j, r);
    }
  }
  loss /= n;
  grad /= static_cast<double>(n);
  for (int r = 0; r < d; ++r) {
    loss += lambda * w2[r];
    grad[r] += 2.0 * lambda * w[r];
  }
  return loss;
}

NcaModel fit_nca(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const NcaOptions& opt) {
  const int n = static_cast<int>(X.rows());
  if (n < 5) throw TooFewSamples("fit_nca needs n >= 5");
  if (y.size() != n) throw DimensionMismatch("fit_nca: |y| != rows(X)");

  NcaModel model;
  model.scaler = Standardizer::fit(X);
  model.train = model.scaler.apply(X);
  model.y = y;
  model.lambda = opt.lambda < 0 ? 1.0 / static_cast<double>(n) : opt.lambda;
  model.hard_neighbor = opt.hard_neighbor;

  auto objective = [&](const Eigen::VectorXd& w, Eigen::VectorXd& g) {
    return nca_value_and_grad(model.train, y, w, model.lambda, g);
  };

  optim::LbfgsOptions lopt;
  lopt.max_iterations = opt.max_iterations;
  const auto res =
      optim::lbfgs_minimize(objective, Eigen::VectorXd::Ones(X.cols()), lopt);
  model.weights = res.x;
  model.loss_history = res.f_history;
  return model;
}

Eigen::VectorXd NcaModel::neighbor_probabilities(const Eigen::RowVectorXd& x) const {
  if (train.rows() == 0) throw UntrainedModel("NCA model is untrained");
  const Eigen::RowVectorXd z = scaler.apply(x);
  const int n = static_cast<int>(train.rows());
  const int d = static_cast<int>(train.cols());
  Eigen::VectorXd dist(n);
  double dmin = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n; ++s) {
    double acc = 0.0;
    for (int r = 0; r < d; ++r)
      acc += weights[r] * weights[r] * std::fabs(z[r] - train(s, r));
    dist[s] = acc;
    dmin = std::min(dmin, acc);
  }
  Eigen::VectorXd p(n);
  double zsum = 0.0;
  for (int s = 0; s < n; ++s) {
    p[s] = std::exp(-(dist[s] - dmin));
    zsum += p[s];
  }
  return p / zsum;
}

double NcaModel::predict(const Eigen::RowVectorXd& x) const {
  const Eigen::VectorXd p = neighbor_probabilities(x);
  if (hard_neighbor) {
    int best = 0;
    for (int s = 1; s < p.size(); ++s)
      if (p[s] > p[best]) best = s;
    return y[best];
  }
  return p.dot(y);
}

}  // namespace respira::reg
