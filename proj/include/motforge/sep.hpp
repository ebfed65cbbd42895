#pragma once

#include <functional>
#include <optional>

#include "motforge/cost.hpp"
#include "motforge/lattice.hpp"
#include "motforge/measure.hpp"
#include "motforge/transform.hpp"

namespace motforge {

struct EmbedResult {
  DiscreteMeasure law;
  double truncated_mass = 0.0;  // unabsorbed at the horizon, incl. window escapes
};

// Exact absorbed-mass distribution of the lattice walk stopped at the
// barrier, by dynamic programming iterated to the lattice horizon, one start
// atom at a time. Mass stepping outside the grid window counts as truncated.
EmbedResult embedded_law(const Barrier& barrier, const DiscreteMeasure& mu,
                         const Lattice& lattice);

struct InducedCouplingResult {
  Coupling coupling;
  double truncated_mass = 0.0;
};

// Joint law of (start, stopped position) under the same dynamic programming.
InducedCouplingResult induced_coupling(const Barrier& barrier,
                                       const DiscreteMeasure& mu,
                                       const Lattice& lattice);

struct FitOptions {
  int max_sweeps = 200;
  double w1_slack = 2.0;  // acceptance: W1(embedded, nu) <= slack * delta
};

struct FitResult {
  Barrier barrier;
  int sweeps = 0;
  double w1_residual = 0.0;
  double max_snap = 0.0;
  bool dispersion_ok = true;  // outer: mu(I) = nu(I^c) = 1 pattern
};

// Fits the right-barrier threshold map by the monotone adjustment loop:
// psi = +inf initially; sweep the nu-support levels outward from the mean,
// bisecting each level's cutoff against the exact absorbed CDF; repeat until
// a sweep changes nothing. Throws on non-convergence, carrying the residual.
FitResult fit_right_barrier(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const Lattice& lattice, FitOptions options = {});

enum class TwoSidedKind { inner, outer };

// Same sweep machinery with two threshold maps, keeping psi1 <= 0 <= psi2.
// The outer kind requires disjoint supports.
FitResult fit_two_sided(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        const Lattice& lattice, TwoSidedKind kind,
                        FitOptions options = {});

struct OpenClosedResult {
  double fraction = 0.0;
  double standard_error = 0.0;
  long long paths = 0;
};

// Fraction of paths whose open- and closed-barrier stopping positions differ
// by more than epsilon, under common random increments.
OpenClosedResult compare_open_closed(const Barrier& barrier,
                                     const DiscreteMeasure& mu,
                                     const Lattice& lattice, int n_paths,
                                     double epsilon);

// A stopped path reduced to the information the supported functionals use.
struct StoppedPath {
  double start = 0.0;
  double end = 0.0;
};

// Path functional depending only on (f(0), f(s)).
class PathFunctional {
 public:
  static PathFunctional terminal(const CostFunction& c);
  static PathFunctional abs_diff_neg();  // -|f(s) - f(0)|
  static PathFunctional abs_cubed();     // |f(s) - f(0)|^3

  double operator()(double start, double end) const { return eval_(start, end); }
  // -x y^2 terminal costs admit an exact stop-go gap (g0 - f0) E[sigma].
  bool quadratic_terminal() const { return quadratic_; }

 private:
  std::function<double(double, double)> eval_;
  bool quadratic_ = false;
};

struct SigmaSpec {
  enum class Kind { fixed_steps, exit_radius } kind = Kind::fixed_steps;
  double value = 1;  // step count, or radius in y units

  static SigmaSpec fixed_steps(long long k) { return {Kind::fixed_steps, double(k)}; }
  static SigmaSpec exit_radius(double r) { return {Kind::exit_radius, r}; }
};

enum class StopGoVerdict { SG, SG2, neither };

const char* to_string(StopGoVerdict v);

struct StopGoReport {
  StopGoVerdict verdict = StopGoVerdict::neither;
  double gap = 0.0;            // Monte-Carlo estimate of the primary inequality
  double standard_error = 0.0;
  double gap2 = 0.0;           // secondary functional, when evaluated
  double standard_error2 = 0.0;
  std::optional<double> exact_gap;  // closed form for quadratic terminal costs
  double mean_sigma_time = 0.0;     // E[sigma] in time units (steps * delta^2)
  long long samples = 0;
};

// Monte-Carlo check of the stop-go inequality for paths f, g with f.end ==
// g.end, using common random continuation increments. Verdict SG when the
// gap clears 3 standard errors; SG2 when the primary gap is flat and the
// secondary functional clears 3 standard errors.
StopGoReport check_stop_go(const StoppedPath& f, const StoppedPath& g,
                           const PathFunctional& gamma,
                           const std::optional<PathFunctional>& gamma2,
                           const SigmaSpec& sigma, const Lattice& lattice,
                           int n_samples);

// Affine (a > 0) rescaling or the flip_x mirror, which exchanges right and
// left barriers via psi'(y) = 2y - psi(y) in the d_minus phase.
Barrier transform_barrier(const TransformSpec& spec, const Barrier& barrier);

}  // namespace motforge
