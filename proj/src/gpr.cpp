#include "respira/gpr.hpp"

#include <cmath>
#include <limits>

#include "respira/errors.hpp"
#include "respira/optim.hpp"
#include "respira/rng.hpp"

namespace respira::reg {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;
constexpr double kLog2Pi = 1.8378770664093454836;

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  const double sig_s = std::exp(theta[0]);
  Eigen::VectorXd inv_ls(d);
  for (int r = 0; r < d; ++r) inv_ls[r] = std::exp(-theta[1 + r]);

  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = sig_s;
    for (int j = i + 1; j < n; ++j) {
      double m = 0.0;
      for (int r = 0; r < d; ++r) {
        const double diff = X(i, r) - X(j, r);
        m += diff * diff * inv_ls[r];
      }
      const double u = kSqrt3 * std::sqrt(m);
      const double k = sig_s * (1.0 + u) * std::exp(-u);
      K(i, j) = K(j, i) = k;
    }
  }
  return K;
}

Eigen::MatrixXd basis(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd H(X.rows(), X.cols() + 1);
  H.col(0).setOnes();
  H.rightCols(X.cols()) = X;
  return H;
}

struct Factorized {
  bool ok = false;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd beta;   // profiled basis coefficients
  Eigen::VectorXd alpha;  // K_y^{-1} (y - H beta)
  double nll = 0.0;
};

Factorized factorize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& theta, double jitter) {
  Factorized f;
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd Ky = kernel_matrix(X, theta);
  const double noise = std::exp(theta[theta.size() - 1]);
  Ky.diagonal().array() += noise + jitter;

  f.llt.compute(Ky);
  if (f.llt.info() != Eigen::Success) return f;

  const Eigen::MatrixXd H = basis(X);
  const Eigen::MatrixXd KinvH = f.llt.solve(H);
  Eigen::MatrixXd M = H.transpose() * KinvH;
  // Tiny ridge keeps the GLS solve defined when H is rank deficient
  // (possible for very small banks).
  M.diagonal().array() += 1e-10 * (M.trace() + 1.0);
  f.beta = M.ldlt().solve(H.transpose() * f.llt.solve(y));

  const Eigen::VectorXd r = y - H * f.beta;
  f.alpha = f.llt.solve(r);

  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(f.llt.matrixL()(i, i));
  f.nll = 0.5 * r.dot(f.alpha) + 0.5 * logdet + 0.5 * n * kLog2Pi;
  f.ok = std::isfinite(f.nll);
  return f;
}

}  // namespace

double gpr_value_and_grad(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  grad = Eigen::VectorXd::Zero(theta.size());

  const Factorized f = factorize(X, y, theta, 0.0);
  if (!f.ok) {
    grad.setZero();
    return std::numeric_limits<double>::infinity();
  }

  const Eigen::MatrixXd Kinv = f.llt.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::VectorXd& alpha = f.alpha;

  // dNLL/dtheta_k = -0.5 a' dK a + 0.5 tr(Kinv dK); the profiled basis
  // coefficients drop out by the envelope theorem.
  const double sig_s = std::exp(theta[0]);
  Eigen::VectorXd inv_ls(d);
  for (int r = 0; r < d; ++r) inv_ls[r] = std::exp(-theta[1 + r]);

  // Noise term.
  const double noise = std::exp(theta[theta.size() - 1]);
  grad[theta.size() - 1] = 0.5 * noise * (Kinv.trace() - alpha.squaredNorm());

  // Signal-variance and per-dimension length-scale terms share the pair
  // loop; dK/dlog sigma_s^2 = K_signal and
  // dK/dlog sigma_r^2 = 1.5 sigma_s^2 exp(-u) * diff_r^2 / sigma_r^2.
  double acc_s = 0.0;
  Eigen::VectorXd acc_ls = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double w = Kinv(i, j) - alpha[i] * alpha[j];  // tr - quadratic form
      if (i == j) {
        acc_s += w * sig_s;
        continue;
      }
      double m = 0.0;
      for (int r = 0; r < d; ++r) {
        const double diff = X(i, r) - X(j, r);
        m += diff * diff * inv_ls[r];
      }
      const double u = kSqrt3 * std::sqrt(m);
      const double eu = std::exp(-u);
      acc_s += w * sig_s * (1.0 + u) * eu;
      const double common = w * 1.5 * sig_s * eu;
      for (int r = 0; r < d; ++r) {
        const double diff = X(i, r) - X(j, r);
        acc_ls[r] += common * diff * diff * inv_ls[r];
      }
    }
  }
  grad[0] = 0.5 * acc_s;
  for (int r = 0; r < d; ++r) grad[1 + r] = 0.5 * acc_ls[r];
  return f.nll;
}

GprModel fit_gpr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const GprOptions& opt) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (n < 5) throw TooFewSamples("fit_gpr needs n >= 5");
  if (y.size() != n) throw DimensionMismatch("fit_gpr: |y| != rows(X)");

  GprModel model;
  model.scaler = Standardizer::fit(X);
  model.train = model.scaler.apply(X);
  model.y = y;

  const double var_y = std::max((y.array() - y.mean()).square().sum() /
                                    static_cast<double>(n),
                                1e-8);
  Eigen::VectorXd theta0(d + 2);
  theta0[0] = std::log(var_y);
  // Standardized features have unit variance, still measure for robustness.
  for (int r = 0; r < d; ++r) {
    const double var_x = std::max(
        (model.train.col(r).array() - model.train.col(r).mean()).square().sum() /
            static_cast<double>(n),
        1e-8);
    theta0[1 + r] = std::log(var_x);
  }
  theta0[d + 1] = std::log(var_y);

  auto objective = [&](const Eigen::VectorXd& th, Eigen::VectorXd& g) {
    return gpr_value_and_grad(model.train, y, th, g);
  };

  Rng rng(opt.seed);
  double best_nll = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta = theta0;
  std::vector<double> best_history;

  optim::LbfgsOptions lopt;
  lopt.max_iterations = opt.max_iterations;
  for (int restart = 0; restart < std::max(1, opt.restarts); ++restart) {
    Eigen::VectorXd start = theta0;
    if (restart > 0)
      for (int k = 0; k < start.size(); ++k)
        start[k] += opt.restart_scale * rng.normal();
    const auto res = optim::lbfgs_minimize(objective, start, lopt);
    if (res.f < best_nll) {
      best_nll = res.f;
      best_theta = res.x;
      best_history = res.f_history;
    }
  }
  if (!std::isfinite(best_nll))
    throw IllConditionedKernel("GPR hyperparameter search failed to find a finite value");

  model.theta = best_theta;
  model.log_marginal = -best_nll;
  model.lml_history.reserve(best_history.size());
  for (double v : best_history) model.lml_history.push_back(-v);

  // Final factorization, escalating jitter if needed.
  model.jitter = 0.0;
  {
    Factorized f = factorize(model.train, y, model.theta, 0.0);
    const double sig_s = std::exp(model.theta[0]);
    double jitter = 1e-12 * sig_s;
    while (!f.ok && jitter <= opt.jitter_max_rel * sig_s) {
      f = factorize(model.train, y, model.theta, jitter);
      model.jitter = jitter;
      jitter *= 10.0;
    }
    if (!f.ok)
      throw IllConditionedKernel("kernel matrix not positive definite at optimum");
  }
  gpr_refit_cache(model);
  return model;
}

void gpr_refit_cache(GprModel& model) {
  const int n = static_cast<int>(model.train.rows());
  const Factorized f = factorize(model.train, model.y, model.theta, model.jitter);
  if (!f.ok)
    throw IllConditionedKernel("kernel matrix not positive definite at optimum");
  model.basis_coef = f.beta;
  model.alpha = f.alpha;
  model.ky_inv = f.llt.solve(Eigen::MatrixXd::Identity(n, n));
}

namespace {

Eigen::VectorXd kernel_vector(const GprModel& m, const Eigen::RowVectorXd& z) {
  const int n = static_cast<int>(m.train.rows());
  const int d = static_cast<int>(m.train.cols());
  const double sig_s = m.signal_var();
  Eigen::VectorXd k(n);
  for (int i = 0; i < n; ++i) {
    double dist = 0.0;
    for (int r = 0; r < d; ++r) {
      const double diff = m.train(i, r) - z[r];
      dist += diff * diff / m.length_scale_var(r);
    }
    const double u = kSqrt3 * std::sqrt(dist);
    k[i] = sig_s * (1.0 + u) * std::exp(-u);
  }
  return k;
}

}  // namespace

double GprModel::predict(const Eigen::RowVectorXd& x) const {
  return predict_with_variance(x).mean;
}

GprModel::Prediction GprModel::predict_with_variance(const Eigen::RowVectorXd& x) const {
  if (train.rows() == 0) throw UntrainedModel("GPR model is untrained");
  const Eigen::RowVectorXd z = scaler.apply(x);
  const Eigen::VectorXd k = kernel_vector(*this, z);

  Eigen::VectorXd h(train.cols() + 1);
  h[0] = 1.0;
  h.tail(train.cols()) = z.transpose();

  Prediction out;
  out.mean = h.dot(basis_coef) + k.dot(alpha);
  const double latent = signal_var() - k.dot(ky_inv * k);
  out.variance = std::max(0.0, latent) + noise_var();
  return out;
}

std::vector<double> gpr_ard_relevance(const GprModel& model) {
  const int d = static_cast<int>(model.train.cols());
  if (d == 0) throw UntrainedModel("GPR model is untrained");
  std::vector<double> logls(static_cast<std::size_t>(d));
  for (int r = 0; r < d; ++r) logls[static_cast<std::size_t>(r)] = model.theta[1 + r];
  const auto [mn, mx] = std::minmax_element(logls.begin(), logls.end());
  std::vector<double> rel(static_cast<std::size_t>(d), 1.0);
  if (*mx - *mn > 1e-12) {
    for (int r = 0; r < d; ++r) {
      const double z = (logls[static_cast<std::size_t>(r)] - *mn) / (*mx - *mn);
      rel[static_cast<std::size_t>(r)] = std::exp(-z);
    }
  }
  return rel;
}

}  // namespace respira::reg
