#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace motforge {

// Absolute position tolerance used when canonicalizing atoms. Transforms can
// produce near-duplicate positions; anything closer than this is one atom.
inline constexpr double kPositionTol = 1e-12;

// Default mass threshold above which a coupling entry counts as support.
// The simplex returns exact zeros for nonbasic variables; this guards rounding.
inline constexpr double kSupportThreshold = 1e-9;

struct Atom {
  double position = 0.0;
  double mass = 0.0;
};

// Finitely supported measure on the line. Canonical form: positions strictly
// increasing, all masses > 0.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  explicit DiscreteMeasure(std::vector<Atom> atoms);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  double total_mass() const { return total_mass_; }

  double position(std::size_t i) const { return atoms_[i].position; }
  double mass(std::size_t i) const { return atoms_[i].mass; }

  bool is_probability(double tol = 1e-9) const;

 private:
  std::vector<Atom> atoms_;
  double total_mass_ = 0.0;
};

struct CouplingEntry {
  double x = 0.0;
  double y = 0.0;
  double mass = 0.0;
};

// Finitely supported measure on the plane, ordered by (x, y).
class Coupling {
 public:
  Coupling() = default;
  explicit Coupling(std::vector<CouplingEntry> entries);

  const std::vector<CouplingEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  double total_mass() const { return total_mass_; }

 private:
  std::vector<CouplingEntry> entries_;
  double total_mass_ = 0.0;
};

// Finite set of planar points, sorted lexicographically, no duplicates.
struct SupportSet {
  std::vector<std::pair<double, double>> points;

  static SupportSet of(std::vector<std::pair<double, double>> pts);
  std::size_t size() const { return points.size(); }
};

DiscreteMeasure make_measure(std::span<const double> points,
                             std::span<const double> weights);

double barycenter(const DiscreteMeasure& m);

// U_m(x) = \int |x - p| dm(p), evaluated exactly.
double potential(const DiscreteMeasure& m, double x);

struct ConvexOrderResult {
  bool ordered = false;
  std::optional<double> witness;  // point where domination or mean equality fails
  std::string reason;
};

// Decides mu <= nu in convex order for probability measures: equal means and
// potential domination, checked on the union of atom positions (exact for
// piecewise linear potentials).
ConvexOrderResult convex_order_leq(const DiscreteMeasure& mu,
                                   const DiscreteMeasure& nu,
                                   double tol = 1e-9);

std::pair<DiscreteMeasure, DiscreteMeasure> marginals(const Coupling& q);

struct MartingaleCheck {
  bool ok = false;
  std::optional<double> witness_x;
  double worst_violation = 0.0;
};

// Per x-atom: |conditional mean of y - x| <= tol * (1 + |x|).
MartingaleCheck is_martingale(const Coupling& q, double tol = 1e-9);

// \int |F_mu - F_nu| over the line, exact on the merged grid.
double wasserstein1(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

SupportSet support(const Coupling& q, double threshold = kSupportThreshold);

// Restriction of q to entries with mass > threshold (not renormalized).
Coupling thresholded(const Coupling& q, double threshold);

}  // namespace motforge
