#include "respira/optim.hpp"

#include <cmath>
#include <deque>

namespace respira::optim {

LbfgsResult lbfgs_minimize(const ObjectiveFn& fn, Eigen::VectorXd x0,
                           const LbfgsOptions& opt) {
  LbfgsResult res;
  const auto dim = x0.size();
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd g(dim), g_new(dim);
  double f = fn(x, g);
  res.f_history.push_back(f);

  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  std::deque<Pair> mem;

  for (int it = 0; it < opt.max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion for the search direction.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(mem.size());
    for (std::size_t i = mem.size(); i-- > 0;) {
      alpha[i] = mem[i].rho * mem[i].s.dot(q);
      q -= alpha[i] * mem[i].y;
    }
    if (!mem.empty()) {
      const auto& last = mem.back();
      q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < mem.size(); ++i) {
      const double beta = mem[i].rho * mem[i].y.dot(q);
      q += (alpha[i] - beta) * mem[i].s;
    }
    Eigen::VectorXd dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0)) {  // not a descent direction; fall back to steepest
      dir = -g;
      slope = g.dot(dir);
      mem.clear();
    }

    // Armijo backtracking.
    double step = 1.0;
    double f_new = f;
    bool accepted = false;
    Eigen::VectorXd x_new;
    for (int ls = 0; ls < opt.max_line_search; ++ls) {
      x_new = x + step * dir;
      f_new = fn(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + opt.armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      mem.push_back({s, yv, 1.0 / sy});
      if (static_cast<int>(mem.size()) > opt.history) mem.pop_front();
    }

    x = std::move(x_new);
    g = g_new;
    f = f_new;
    res.f_history.push_back(f);
    ++res.iterations;
    if (s.lpNorm<Eigen::Infinity>() <= opt.step_tol) {
      res.converged = true;
      break;
    }
  }

  res.x = std::move(x);
  res.f = f;
  return res;
}

}  // namespace respira::optim
