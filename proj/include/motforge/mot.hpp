#pragma once

#include <functional>
#include <optional>

#include "motforge/cost.hpp"
#include "motforge/lp.hpp"
#include "motforge/measure.hpp"

namespace motforge {

enum class Sense { min, max };

struct MotSolution {
  Coupling coupling;
  double value = 0.0;
  LpStatus status = LpStatus::infeasible;
};

// Solves the discrete martingale optimal transport LP over variables
// q(x_i, y_j) >= 0 with row-marginal, column-marginal and per-x barycenter
// constraints sum_j (y_j - x_i) q_ij = 0. Marginals not in convex order
// report infeasible (Strassen) without touching the LP.
MotSolution solve_mot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                      const CostFunction& cost, Sense sense = Sense::min);

struct MonotoneViolation {
  // (x1,y1), (x1,y2), (x2,yp) with x1 < x2 (or x1 > x2 for the right check),
  // y1 < y2 and yp strictly inside (y1, y2).
  std::pair<double, double> p1, p2, p3;
};

// First violating triple of the left-monotone (no-crossing) property,
// lexicographic in ((x1,y1),(x1,y2),(x2,yp)); nullopt if none.
std::optional<MonotoneViolation> check_left_monotone(const SupportSet& s);

// Mirror image: x2 < x1 forbidden from splitting (y1, y2).
std::optional<MonotoneViolation> check_right_monotone(const SupportSet& s);

enum class Direction { increasing, decreasing };

struct TwoGraphResult {
  bool ok = false;
  std::optional<double> offending_column;  // x with more than two y values
};

// True iff each x-column carries at most two y values and the columnwise
// lower and upper selections are both monotone in the given direction.
TwoGraphResult check_monotone_graphs(const SupportSet& s, Direction direction);

// Smallest mass fraction that must be dropped (smallest entries first) so
// that `pred` holds on the support of what remains. Returns 0 if the full
// support already passes, 1.0+ if it never does within `max_fraction`.
double mass_to_pass(const Coupling& q,
                    const std::function<bool(const SupportSet&)>& pred,
                    double max_fraction = 0.05);

}  // namespace motforge
