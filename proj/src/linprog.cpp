#include "respira/linprog.hpp"

#include <cmath>
#include <limits>

namespace respira::lp {

namespace {

constexpr double kEps = 1e-10;
// Reduced costs within kDust of zero are rounding debris: pivoting on them
// can manufacture phantom rays after many pivots.
constexpr double kDust = 1e-8;

// Tableau with rows 0..m-1 = constraints, row m = phase objective (reduced
// costs), row m+1 = true objective. Columns 0..n+m-1 (n structural + m
// artificial), column n+m = rhs.
struct Tableau {
  int m, n, width;
  std::vector<double> t;
  std::vector<int> basis;

  double& at(int r, int c) { return t[static_cast<std::size_t>(r * width + c)]; }
  double at(int r, int c) const { return t[static_cast<std::size_t>(r * width + c)]; }

  void pivot(int pr, int pc) {
    const double pv = at(pr, pc);
    for (int c = 0; c < width; ++c) at(pr, c) /= pv;
    for (int r = 0; r < m + 2; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (int c = 0; c < width; ++c) at(r, c) -= f * at(pr, c);
    }
    basis[static_cast<std::size_t>(pr)] = pc;
  }
};

// Leaving row for an entering column: minimum ratio; ties within tolerance
// break toward the largest pivot magnitude (numerical stability) or, under
// Bland's rule, toward the smallest basis index (anti-cycling).
int leaving_row(const Tableau& tb, int pc, bool bland) {
  int pr = -1;
  double best_ratio = std::numeric_limits<double>::infinity();
  double best_pivot = 0.0;
  for (int r = 0; r < tb.m; ++r) {
    const double a = tb.at(r, pc);
    if (a <= kEps) continue;
    const double ratio = tb.at(r, tb.width - 1) / a;
    bool take = false;
    if (ratio < best_ratio - kEps) {
      take = true;
    } else if (ratio < best_ratio + kEps && pr >= 0) {
      take = bland ? tb.basis[static_cast<std::size_t>(r)] <
                         tb.basis[static_cast<std::size_t>(pr)]
                   : a > best_pivot;
    }
    if (take || pr < 0) {
      best_ratio = std::min(best_ratio, ratio);
      best_pivot = a;
      pr = r;
    }
  }
  return pr;
}

// One simplex phase. Entering rule: Dantzig (most negative reduced cost)
// for speed and stability, or Bland (lowest index) for guaranteed
// termination. Columns with only dust-negative reduced cost and no
// pivotable row are skipped instead of being declared rays.
Status run_simplex(Tableau& tb, int obj_row, int allowed_cols, long& iter_budget,
                   bool bland) {
  while (true) {
    if (--iter_budget < 0) return Status::iteration_limit;
    int pc = -1, pr = -1;
    if (bland) {
      for (int c = 0; c < allowed_cols; ++c) {
        if (!(tb.at(obj_row, c) < -kEps)) continue;
        const int row = leaving_row(tb, c, true);
        if (row < 0) {
          if (tb.at(obj_row, c) < -kDust) return Status::unbounded;
          continue;
        }
        pc = c;
        pr = row;
        break;
      }
    } else {
      // Most negative reduced cost whose column admits a pivot.
      double best_rc = -kEps;
      for (int c = 0; c < allowed_cols; ++c) {
        const double rc = tb.at(obj_row, c);
        if (rc < best_rc) {
          const int row = leaving_row(tb, c, false);
          if (row < 0) {
            if (rc < -kDust) return Status::unbounded;
            continue;
          }
          best_rc = rc;
          pc = c;
          pr = row;
        }
      }
    }
    if (pc < 0) return Status::optimal;
    tb.pivot(pr, pc);
  }
}

Solution solve_once(const std::vector<double>& A, const std::vector<double>& b,
                    const std::vector<double>& c, int m, int n,
                    long max_iterations, bool bland) {
  Solution sol;
  Tableau tb;
  tb.m = m;
  tb.n = n;
  tb.width = n + m + 1;
  tb.t.assign(static_cast<std::size_t>((m + 2) * tb.width), 0.0);
  tb.basis.resize(static_cast<std::size_t>(m));

  for (int r = 0; r < m; ++r) {
    const double sign = b[static_cast<std::size_t>(r)] < 0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j)
      tb.at(r, j) = sign * A[static_cast<std::size_t>(r * n + j)];
    tb.at(r, n + r) = 1.0;  // artificial
    tb.at(r, tb.width - 1) = sign * b[static_cast<std::size_t>(r)];
    tb.basis[static_cast<std::size_t>(r)] = n + r;
  }
  // Phase-1 objective: minimize the sum of artificials.
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int r = 0; r < m; ++r) acc += tb.at(r, j);
    tb.at(m, j) = -acc;
  }
  double rhs_acc = 0.0;
  for (int r = 0; r < m; ++r) rhs_acc += tb.at(r, tb.width - 1);
  tb.at(m, tb.width - 1) = -rhs_acc;
  for (int j = 0; j < n; ++j) tb.at(m + 1, j) = c[static_cast<std::size_t>(j)];

  long budget = max_iterations;
  {
    const Status st = run_simplex(tb, m, n + m, budget, bland);
    if (st == Status::iteration_limit) {
      sol.status = st;
      return sol;
    }
    if (st == Status::unbounded) {
      // Phase 1 is bounded below by zero: a ray here means the tableau has
      // degraded numerically. Report as an iteration problem so the caller
      // can retry with the safer pivot rule.
      sol.status = Status::iteration_limit;
      return sol;
    }
  }
  if (tb.at(m, tb.width - 1) < -1e-7) {
    sol.status = Status::infeasible;
    return sol;
  }
  // Drive any artificial still in the basis out (degenerate rows).
  for (int r = 0; r < m; ++r) {
    if (tb.basis[static_cast<std::size_t>(r)] >= n) {
      int pc = -1;
      for (int j = 0; j < n; ++j)
        if (std::fabs(tb.at(r, j)) > kEps) {
          pc = j;
          break;
        }
      if (pc >= 0) tb.pivot(r, pc);
    }
  }

  const Status st = run_simplex(tb, m + 1, n, budget, bland);
  if (st != Status::optimal) {
    sol.status = st;
    return sol;
  }

  sol.status = Status::optimal;
  sol.x.assign(static_cast<std::size_t>(n), 0.0);
  for (int r = 0; r < m; ++r) {
    const int bv = tb.basis[static_cast<std::size_t>(r)];
    if (bv < n) sol.x[static_cast<std::size_t>(bv)] = tb.at(r, tb.width - 1);
  }
  sol.objective = 0.0;
  for (int j = 0; j < n; ++j)
    sol.objective += c[static_cast<std::size_t>(j)] * sol.x[static_cast<std::size_t>(j)];

  // Dual prices from the reduced costs of the artificial columns: the
  // artificial for row r has cost 0 in phase 2, so its reduced cost equals
  // -y_r (times the row sign flip applied at setup).
  sol.dual.assign(static_cast<std::size_t>(m), 0.0);
  for (int r = 0; r < m; ++r) {
    const double sign = b[static_cast<std::size_t>(r)] < 0 ? -1.0 : 1.0;
    sol.dual[static_cast<std::size_t>(r)] = -tb.at(m + 1, n + r) * sign;
  }
  return sol;
}

}  // namespace

Solution solve(const std::vector<double>& A, const std::vector<double>& b,
               const std::vector<double>& c, int m, int n, int max_iterations) {
  // Fast, numerically careful rule first; Bland's rule as the fallback for
  // the rare cycling or degradation cases.
  Solution sol = solve_once(A, b, c, m, n, max_iterations, false);
  if (sol.status == Status::optimal || sol.status == Status::infeasible) return sol;
  return solve_once(A, b, c, m, n, max_iterations, true);
}

}  // namespace respira::lp
