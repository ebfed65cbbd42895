#include "motforge/mot.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace motforge {

MotSolution solve_mot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                      const CostFunction& cost, Sense sense) {
  if (!mu.is_probability() || !nu.is_probability())
    throw std::invalid_argument("solve_mot: marginals must be probability measures");

  MotSolution sol;
  if (!convex_order_leq(mu, nu).ordered) {
    sol.status = LpStatus::infeasible;  // Strassen
    return sol;
  }

  const int m = static_cast<int>(mu.size());
  const int n = static_cast<int>(nu.size());
  const int nvar = m * n;
  const int nrow = m + n + m;

  std::vector<double> A(static_cast<std::size_t>(nrow) * nvar, 0.0);
  std::vector<double> b(nrow, 0.0);
  std::vector<double> c(nvar, 0.0);

  const double sign = sense == Sense::min ? 1.0 : -1.0;
  for (int i = 0; i < m; ++i) {
    const double x = mu.position(i);
    for (int j = 0; j < n; ++j) {
      const double y = nu.position(j);
      const int v = i * n + j;
      c[v] = sign * cost(x, y);
      A[static_cast<std::size_t>(i) * nvar + v] = 1.0;          // row marginal
      A[static_cast<std::size_t>(m + j) * nvar + v] = 1.0;      // column marginal
      A[static_cast<std::size_t>(m + n + i) * nvar + v] = y - x;  // martingale
    }
    b[i] = mu.mass(i);
    b[m + n + i] = 0.0;
  }
  for (int j = 0; j < n; ++j) b[m + j] = nu.mass(j);

  SimplexSolver solver;
  LpResult lp = solver.solve(nrow, nvar, A.data(), b.data(), c.data());
  sol.status = lp.status;
  if (lp.status != LpStatus::optimal) return sol;

  std::vector<CouplingEntry> entries;
  entries.reserve(nvar);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      const double q = lp.x[i * n + j];
      if (q > 0.0) entries.push_back({mu.position(i), nu.position(j), q});
    }
  sol.coupling = Coupling(std::move(entries));
  sol.value = sign * lp.value;
  return sol;
}

namespace {

std::optional<MonotoneViolation> check_monotone_impl(const SupportSet& s,
                                                     bool left) {
  // Points are sorted by (x, y); scan pairs sharing an x-column, then the
  // third point on the appropriate side.
  const auto& pts = s.points;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n && pts[j].first == pts[i].first; ++j) {
      const double x1 = pts[i].first;
      const double y1 = pts[i].second;
      const double y2 = pts[j].second;  // y1 < y2 by ordering
      for (std::size_t k = 0; k < n; ++k) {
        const double x2 = pts[k].first;
        if (left ? (x2 <= x1) : (x2 >= x1)) continue;
        const double yp = pts[k].second;
        if (yp > y1 && yp < y2)
          return MonotoneViolation{pts[i], pts[j], pts[k]};
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<MonotoneViolation> check_left_monotone(const SupportSet& s) {
  return check_monotone_impl(s, true);
}

std::optional<MonotoneViolation> check_right_monotone(const SupportSet& s) {
  return check_monotone_impl(s, false);
}

TwoGraphResult check_monotone_graphs(const SupportSet& s, Direction direction) {
  // Group by column. If a valid two-graph split exists, the columnwise
  // (min, max) assignment is also valid, so only that one is checked.
  std::map<double, std::pair<double, double>> columns;  // x -> (lo, hi)
  std::map<double, int> counts;
  for (const auto& [x, y] : s.points) {
    auto it = columns.find(x);
    if (it == columns.end()) {
      columns[x] = {y, y};
      counts[x] = 1;
    } else {
      it->second.first = std::min(it->second.first, y);
      it->second.second = std::max(it->second.second, y);
      if (++counts[x] > 2) return {false, x};
    }
  }
  const double dir = direction == Direction::increasing ? 1.0 : -1.0;
  bool first = true;
  double prev_lo = 0.0, prev_hi = 0.0;
  for (const auto& [x, lohi] : columns) {
    if (!first) {
      if (dir * (lohi.first - prev_lo) < 0.0 || dir * (lohi.second - prev_hi) < 0.0)
        return {false, x};
    }
    prev_lo = lohi.first;
    prev_hi = lohi.second;
    first = false;
  }
  return {true, std::nullopt};
}

double mass_to_pass(const Coupling& q,
                    const std::function<bool(const SupportSet&)>& pred,
                    double max_fraction) {
  if (q.empty()) return pred(SupportSet{}) ? 0.0 : 2.0;
  std::vector<CouplingEntry> by_mass(q.entries());
  std::sort(by_mass.begin(), by_mass.end(),
            [](const CouplingEntry& a, const CouplingEntry& b) {
              if (a.mass != b.mass) return a.mass < b.mass;
              return a.x != b.x ? a.x < b.x : a.y < b.y;
            });
  const double total = q.total_mass();
  double dropped = 0.0;
  std::vector<std::pair<double, double>> pts;
  pts.reserve(by_mass.size());
  for (const auto& e : by_mass) pts.emplace_back(e.x, e.y);
  // Drop the smallest entries one at a time until the predicate passes.
  for (std::size_t k = 0;; ++k) {
    SupportSet ss = SupportSet::of(
        std::vector<std::pair<double, double>>(pts.begin() + k, pts.end()));
    if (pred(ss)) return dropped / total;
    if (k >= by_mass.size()) break;
    dropped += by_mass[k].mass;
    if (dropped / total > max_fraction) return dropped / total;
  }
  return 2.0;
}

}  // namespace motforge
