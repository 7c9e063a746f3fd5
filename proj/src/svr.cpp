#include "respira/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "respira/errors.hpp"

namespace respira::reg {

namespace {

double interpolated_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& Z) {
  const int n = static_cast<int>(Z.rows());
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i) {
    G(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double d2 = (Z.row(i) - Z.row(j)).squaredNorm();
      G(i, j) = G(j, i) = std::exp(-d2);
    }
  }
  return G;
}

}  // namespace

double svr_dual_objective(const Eigen::MatrixXd& G, const Eigen::VectorXd& beta,
                          const Eigen::VectorXd& y, double epsilon) {
  return 0.5 * beta.dot(G * beta) + epsilon * beta.lpNorm<1>() - y.dot(beta);
}

SvrModel fit_svr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const SvrOptions& opt) {
  const int n = static_cast<int>(X.rows());
  if (n < 2) throw TooFewSamples("fit_svr needs n >= 2");
  if (y.size() != n) throw DimensionMismatch("fit_svr: |y| != rows(X)");

  SvrModel model;
  model.scaler = Standardizer::fit(X);
  model.support = model.scaler.apply(X);

  std::vector<double> yv(y.data(), y.data() + y.size());
  const double iqr = interpolated_quantile(yv, 0.75) - interpolated_quantile(yv, 0.25);
  if (iqr > 0) {
    model.epsilon = iqr / 13.49;
  } else {
    // Degenerate response distribution: floor epsilon instead of failing.
    const double sd = std::sqrt((y.array() - y.mean()).square().sum() /
                                static_cast<double>(n));
    model.epsilon = 1e-3 * sd + 1e-12;
  }
  model.box_c = 10.0 * model.epsilon;
  const double C = model.box_c;
  const double eps = model.epsilon;

  const Eigen::MatrixXd G = gaussian_gram(model.support);

  // SMO over the 2n box variables z = (alpha, alpha*), sign +1 for alpha
  // and -1 for alpha*, constrained by sum(sign * z) = 0.
  Eigen::VectorXd z = Eigen::VectorXd::Zero(2 * n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd Gb = Eigen::VectorXd::Zero(n);  // G * beta cache

  auto grad = [&](int k) {
    const int i = k % n;
    return k < n ? Gb[i] + eps - y[i] : -Gb[i] + eps + y[i];
  };
  auto sign_of = [&](int k) { return k < n ? 1.0 : -1.0; };

  double gap = std::numeric_limits<double>::infinity();
  for (long iter = 0; iter < opt.max_iterations; ++iter) {
    // rho bounds from the KKT conditions: lower bounds come from variables
    // that can decrease, upper bounds from variables that can increase.
    int i_lo = -1, i_up = -1;
    double lo_val = -std::numeric_limits<double>::infinity();
    double up_val = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 2 * n; ++k) {
      const double s = sign_of(k);
      const double v = s * grad(k);
      if ((s > 0 ? z[k] > 0 : z[k] < C) && v > lo_val) {
        lo_val = v;
        i_lo = k;
      }
      if ((s > 0 ? z[k] < C : z[k] > 0) && v < up_val) {
        up_val = v;
        i_up = k;
      }
    }
    gap = (i_lo >= 0 && i_up >= 0) ? lo_val - up_val : 0.0;
    if (gap <= opt.kkt_tol) break;

    const int a = i_lo, b = i_up;
    const int ia = a % n, ib = b % n;
    // Feasible direction: z_a moves by -sign_a * t, z_b by +sign_b * t,
    // so beta_ia changes by -t and beta_ib by +t.
    double t_max = std::numeric_limits<double>::infinity();
    t_max = std::min(t_max, sign_of(a) > 0 ? z[a] : C - z[a]);
    t_max = std::min(t_max, sign_of(b) > 0 ? C - z[b] : z[b]);
    if (!(t_max > 0)) break;  // numerically stuck

    double t;
    if (ia == ib) {
      // Same sample on both sides: the quadratic term cancels and the
      // objective decreases linearly (the alpha*alpha* cleanup case).
      t = t_max;
    } else {
      const double curv = std::max(G(ia, ia) + G(ib, ib) - 2.0 * G(ia, ib), 1e-12);
      t = std::min(t_max, (lo_val - up_val) / curv);
    }
    if (!(t > 0)) break;

    z[a] -= sign_of(a) * t;  // alpha decreases / alpha* increases
    z[b] += sign_of(b) * t;  // alpha increases / alpha* decreases
    beta[ia] -= t;
    beta[ib] += t;
    Gb -= t * G.col(ia);
    Gb += t * G.col(ib);
  }
  model.kkt_gap = std::max(0.0, gap);

  // Bias from the KKT multiplier interval midpoint.
  {
    double lo = -std::numeric_limits<double>::infinity();
    double up = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 2 * n; ++k) {
      const double s = sign_of(k);
      const double v = s * grad(k);
      if (s > 0 ? z[k] > 0 : z[k] < C) lo = std::max(lo, v);
      if (s > 0 ? z[k] < C : z[k] > 0) up = std::min(up, v);
    }
    double rho = 0.0;
    if (std::isfinite(lo) && std::isfinite(up))
      rho = 0.5 * (lo + up);
    else if (std::isfinite(lo))
      rho = lo;
    else if (std::isfinite(up))
      rho = up;
    model.bias = -rho;
  }
  model.dual_coef = std::move(beta);
  return model;
}

double SvrModel::predict(const Eigen::RowVectorXd& x) const {
  if (support.rows() == 0) throw UntrainedModel("SVR model has no support data");
  const Eigen::RowVectorXd zx = scaler.apply(x);
  double acc = bias;
  for (int i = 0; i < support.rows(); ++i) {
    if (dual_coef[i] == 0.0) continue;
    acc += dual_coef[i] * std::exp(-(support.row(i) - zx).squaredNorm());
  }
  return acc;
}

}  // namespace respira::reg
