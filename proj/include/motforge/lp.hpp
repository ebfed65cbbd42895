#pragma once

#include <vector>

namespace motforge {

enum class LpStatus { optimal, infeasible, unbounded };

const char* to_string(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
};

// Dense two-phase tableau simplex for
//     min c'x   s.t.  A x = b,  x >= 0.
//
// Dantzig pricing with lowest-index tie breaks; switches to Bland's rule
// permanently after 50 degenerate pivots, so every solve terminates and is
// deterministic for fixed input. Sized for the small instances this project
// produces (at most a few hundred variables).
class SimplexSolver {
 public:
  // A row-major, m rows by n columns.
  LpResult solve(int m, int n, const double* A, const double* b, const double* c);

 private:
  std::vector<double> tab_;   // (m+1) x (n+m+1), objective row last
  std::vector<int> basis_;    // -1 marks a retired redundant row
};

LpResult lp_solve(const std::vector<double>& objective,
                  const std::vector<std::vector<double>>& equality_lhs,
                  const std::vector<double>& equality_rhs);

}  // namespace motforge
