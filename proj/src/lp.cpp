#include "motforge/lp.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace motforge {

namespace {
constexpr double kReducedCostTol = 1e-9;
constexpr double kPivotTol = 1e-10;
constexpr double kDegenerateStep = 1e-12;
constexpr double kPhase1FeasTol = 1e-8;
constexpr int kBlandAfter = 50;
}  // namespace

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "?";
}

LpResult SimplexSolver::solve(int m, int n, const double* A, const double* b,
                              const double* c) {
  if (m < 0 || n <= 0) throw std::invalid_argument("lp_solve: bad dimensions");

  int width = n + m + 1;  // structural, artificial, rhs
  tab_.assign(static_cast<std::size_t>(m + 1) * width, 0.0);
  basis_.assign(m, 0);
  auto row = [&](int i) { return tab_.data() + static_cast<std::size_t>(i) * width; };

  for (int i = 0; i < m; ++i) {
    double* r = row(i);
    const double sign = b[i] < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) r[j] = sign * A[static_cast<std::size_t>(i) * n + j];
    r[n + i] = 1.0;
    r[width - 1] = sign * b[i];
    basis_[i] = n + i;
  }

  // Phase 1 objective: minimize the sum of artificials. Reduced costs start
  // as the negated column sums of the constraint rows.
  {
    double* obj = row(m);
    for (int j = 0; j < width; ++j) {
      if (j >= n && j < n + m) continue;  // artificial reduced costs are 0
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += row(i)[j];
      obj[j] = -s;
    }
  }

  int iterations = 0;
  int degenerate = 0;
  bool bland = false;
  const int max_iter = 2000 + 200 * (m + n);

  auto pivot = [&](int pr, int pc) {
    double* prow = row(pr);
    const double piv = prow[pc];
    const double inv = 1.0 / piv;
    for (int j = 0; j < width; ++j) prow[j] *= inv;
    prow[pc] = 1.0;
    for (int i = 0; i <= m; ++i) {
      if (i == pr) continue;
      double* r = row(i);
      const double f = r[pc];
      if (f == 0.0) continue;
      for (int j = 0; j < width; ++j) r[j] -= f * prow[j];
      r[pc] = 0.0;
    }
    basis_[pr] = pc;
  };

  // Columns < enter_limit may enter (phase 2 forbids artificials).
  auto iterate = [&](int enter_limit) -> LpStatus {
    for (;;) {
      if (++iterations > max_iter)
        throw std::runtime_error("lp_solve: iteration limit exceeded");
      const double* obj = row(m);
      int pc = -1;
      if (bland) {
        for (int j = 0; j < enter_limit; ++j)
          if (obj[j] < -kReducedCostTol) { pc = j; break; }
      } else {
        double best = -kReducedCostTol;
        for (int j = 0; j < enter_limit; ++j)
          if (obj[j] < best) { best = obj[j]; pc = j; }
      }
      if (pc < 0) return LpStatus::optimal;

      int pr = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        const double a = row(i)[pc];
        if (a > kPivotTol && basis_[i] >= 0) {
          const double ratio = row(i)[width - 1] / a;
          if (ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 && (pr < 0 || basis_[i] < basis_[pr]))) {
            best_ratio = ratio;
            pr = i;
          }
        }
      }
      if (pr < 0) return LpStatus::unbounded;
      if (best_ratio <= kDegenerateStep) {
        if (++degenerate >= kBlandAfter) bland = true;
      }
      pivot(pr, pc);
    }
  };

  // Phase 1.
  if (iterate(n) == LpStatus::unbounded)
    throw std::runtime_error("lp_solve: phase 1 unbounded");  // cannot happen
  if (-row(m)[width - 1] > kPhase1FeasTol) {
    LpResult res;
    res.status = LpStatus::infeasible;
    res.iterations = iterations;
    return res;
  }

  // Drive leftover artificials out of the basis; an all-zero structural row
  // is redundant and is retired.
  for (int i = 0; i < m; ++i) {
    if (basis_[i] < n) continue;
    int pc = -1;
    for (int j = 0; j < n; ++j)
      if (std::abs(row(i)[j]) > kPivotTol) { pc = j; break; }
    if (pc >= 0) {
      pivot(i, pc);
    } else {
      std::memset(row(i), 0, sizeof(double) * width);
      basis_[i] = -1;
    }
  }

  // Compact to structural columns only; artificials never re-enter.
  {
    const int width2 = n + 1;
    for (int i = 0; i <= m; ++i) {
      double* src = tab_.data() + static_cast<std::size_t>(i) * width;
      double* dst = tab_.data() + static_cast<std::size_t>(i) * width2;
      std::memmove(dst, src, sizeof(double) * n);
      dst[n] = src[width - 1];
    }
    width = width2;
  }

  // Phase 2: rebuild the reduced-cost row from the real objective.
  {
    double* obj = row(m);
    std::memset(obj, 0, sizeof(double) * width);
    for (int j = 0; j < n; ++j) obj[j] = c[j];
    for (int i = 0; i < m; ++i) {
      if (basis_[i] < 0) continue;
      const double cb = c[basis_[i]];
      if (cb == 0.0) continue;
      double* r = row(i);
      for (int j = 0; j < width; ++j) obj[j] -= cb * r[j];
    }
    for (int i = 0; i < m; ++i)
      if (basis_[i] >= 0) obj[basis_[i]] = 0.0;
  }

  degenerate = 0;
  const LpStatus st = iterate(n);

  LpResult res;
  res.iterations = iterations;
  res.status = st;
  if (st == LpStatus::optimal) {
    res.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i)
      if (basis_[i] >= 0) res.x[basis_[i]] = row(i)[width - 1];
    double v = 0.0;
    for (int j = 0; j < n; ++j) v += c[j] * res.x[j];
    res.value = v;
  }
  return res;
}

LpResult lp_solve(const std::vector<double>& objective,
                  const std::vector<std::vector<double>>& equality_lhs,
                  const std::vector<double>& equality_rhs) {
  const int n = static_cast<int>(objective.size());
  const int m = static_cast<int>(equality_lhs.size());
  if (static_cast<int>(equality_rhs.size()) != m)
    throw std::invalid_argument("lp_solve: rhs/lhs row mismatch");
  std::vector<double> flat(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(equality_lhs[i].size()) != n)
      throw std::invalid_argument("lp_solve: row width mismatch");
    std::memcpy(flat.data() + static_cast<std::size_t>(i) * n,
                equality_lhs[i].data(), sizeof(double) * n);
  }
  SimplexSolver solver;
  return solver.solve(m, n, flat.data(), equality_rhs.data(), objective.data());
}

}  // namespace motforge
