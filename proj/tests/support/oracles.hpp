#pragma once

// Test-only oracles, independent of the production solver path: brute-force
// vertex enumeration of {x >= 0, Ax = b} via Eigen factorizations.

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <vector>

namespace motforge::testing {

struct VertexScan {
  double min_value = std::numeric_limits<double>::infinity();
  std::vector<double> argmin;
  int vertices = 0;
};

// Enumerates all basis subsets of size rank(A), solves each square-ish
// system, keeps feasible solutions and minimizes c'x over them. Exponential,
// fine for the handful-of-variables polytopes the tests use.
inline VertexScan enumerate_vertices(const Eigen::MatrixXd& A,
                                     const Eigen::VectorXd& b,
                                     const Eigen::VectorXd& c,
                                     double feas_tol = 1e-9) {
  const int n = static_cast<int>(A.cols());
  const int r = static_cast<int>(Eigen::FullPivLU<Eigen::MatrixXd>(A).rank());
  VertexScan out;

  std::vector<int> idx(r);
  std::vector<int> comb;
  // lexicographic combinations of size r out of n
  comb.resize(r);
  for (int i = 0; i < r; ++i) comb[i] = i;
  if (r == 0 || r > n) return out;
  for (;;) {
    Eigen::MatrixXd B(A.rows(), r);
    for (int k = 0; k < r; ++k) B.col(k) = A.col(comb[k]);
    Eigen::VectorXd xb = B.colPivHouseholderQr().solve(b);
    if ((B * xb - b).cwiseAbs().maxCoeff() <= feas_tol && xb.minCoeff() >= -feas_tol) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
      for (int k = 0; k < r; ++k) x(comb[k]) = xb(k);
      const double v = c.dot(x);
      ++out.vertices;
      if (v < out.min_value) {
        out.min_value = v;
        out.argmin.assign(x.data(), x.data() + n);
      }
    }
    int i = r - 1;
    while (i >= 0 && comb[i] == n - r + i) --i;
    if (i < 0) break;
    ++comb[i];
    for (int j = i + 1; j < r; ++j) comb[j] = comb[j - 1] + 1;
  }
  return out;
}

}  // namespace motforge::testing
