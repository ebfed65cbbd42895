#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "motforge/cost.hpp"
#include "motforge/measure.hpp"

namespace motforge {

struct CompetitorCertificate {
  Coupling alpha;
  Coupling beta;
  double gap = 0.0;  // beta(c) - alpha(c), negative when beta improves
};

struct CompetitorMinimum {
  double value = 0.0;
  Coupling beta;
};

// Minimizes beta(c) over all competitors of alpha: measures on
// supp(alpha_0) x supp(alpha_1) with alpha's marginals and, per first
// coordinate, alpha's conditional barycenters. The polytope always contains
// alpha itself, so the value never exceeds alpha(c).
CompetitorMinimum min_over_competitors(const Coupling& alpha,
                                       const CostFunction& cost);

struct MonotoneReport {
  bool monotone = true;
  std::optional<CompetitorCertificate> certificate;
  // Tested budget, reported alongside any "monotone" verdict: the check is a
  // sampled/enumerated approximation, not a proof.
  long long subsets = 0;
  long long lp_solves = 0;
  long long random_trials = 0;
};

// Certifies c-monotonicity of a finite set against all subsets of size
// <= max_support: the canonical three-point competitor family plus random
// positive weightings. A subset whose uniformly weighted measure cannot be
// improved at all is certified outright: the optimal dual gives an affine
// + k(x)y support function tight on the whole subset, which makes every
// weighting optimal, so the random trials are skipped for it.
MonotoneReport is_finitely_monotone(const SupportSet& xi,
                                    const CostFunction& cost, int max_support,
                                    int trials, std::uint64_t seed);

struct BlindWitness {
  double x1 = 0, x2 = 0, y1 = 0, y_mid = 0, y2 = 0;
  double lhs = 0, rhs = 0;  // the mismatched second differences
};

// Tests whether f integrates identically against all competitor pairs on the
// grid, i.e. admits the form phi(x) + psi(y) + k(x) y. Returns the first
// witness (x1, x2, y1, y_mid, y2) in lexicographic order, nullopt if blind.
std::optional<BlindWitness> is_competitorblind(const CostFunction& f,
                                               std::span<const double> x_grid,
                                               std::span<const double> y_grid,
                                               double tol = 1e-9);

struct BlindDecomposition {
  std::vector<double> phi;  // per x grid point
  std::vector<double> psi;  // per y grid point; psi[0] = psi[1] = 0 (gauge)
  std::vector<double> k;    // per x grid point
  double residual = 0.0;    // root mean square misfit
};

// Least-squares fit f(x,y) ~ phi(x) + psi(y) + k(x) y under the gauge
// psi = 0 at the two smallest y grid points.
BlindDecomposition decompose_competitorblind(const CostFunction& f,
                                             std::span<const double> x_grid,
                                             std::span<const double> y_grid);

enum class CompetitorCondition { C1, C2, C3 };

const char* to_string(CompetitorCondition c);

struct C123Result {
  bool ok = false;
  std::optional<CompetitorCondition> failed;
  std::optional<double> where;  // the x (C1, C3) or y (C2) of the failure
};

// Checks the three equalities characterizing competitors: equal x-marginals,
// equal y-marginals and per-x equality of sum (y - x) mass.
C123Result verify_C123(const Coupling& alpha, const Coupling& beta,
                       double tol = 1e-9);

}  // namespace motforge
