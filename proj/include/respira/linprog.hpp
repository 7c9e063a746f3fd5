#pragma once

#include <vector>

namespace respira::lp {

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Solution {
  Status status = Status::infeasible;
  double objective = 0.0;
  std::vector<double> x;     // primal solution
  std::vector<double> dual;  // one price per constraint row
};

// Minimizes c'x subject to A x = b, x >= 0 (dense, row-major A of shape
// m x n). Two-phase tableau simplex with Bland's rule; intended for small
// problems (hundreds of rows). b may have any sign.
Solution solve(const std::vector<double>& A, const std::vector<double>& b,
               const std::vector<double>& c, int m, int n,
               int max_iterations = 200000);

}  // namespace respira::lp
