#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "motforge/cost.hpp"
#include "motforge/measure.hpp"
#include "motforge/monotone.hpp"

namespace motforge {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct Rect {
  Interval x, y;
};

// A (T, h) pair: bijective point map T(x,y) = (s, t) on a rectangle together
// with a strictly positive weight h. Induces the measure transform
//   (tau pi)(g) = int g(T(x,y)) h(x,y) dpi(x,y).
class TransformSpec {
 public:
  enum class Kind { affine, numeraire, mirror, custom };

  // T(x,y) = (a x + b, a y + b), h = 1. a != 0.
  static TransformSpec affine(double a, double b, Rect domain = {});
  // T(x,y) = (a/(x-b), a/(y-b)), h(y) = c (y-b); domain must lie in (b, inf).
  static TransformSpec numeraire(double a, double b, double c, Rect domain = {});
  // Coordinate sign flips, h = 1.
  static TransformSpec mirror(bool flip_x, bool flip_y);
  // Caller supplies the maps and the inverse; inverse o T = id is checked on
  // a sample of the domain at construction, as is positivity of h.
  static TransformSpec custom(std::string label,
                              std::function<std::pair<double, double>(double, double)> fwd,
                              std::function<double(double, double)> h,
                              std::function<std::pair<double, double>(double, double)> inv,
                              Rect domain);

  Kind kind() const { return kind_; }
  const std::string& label() const { return label_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  bool flips_x() const { return flip_x_; }
  bool flips_y() const { return flip_y_; }
  const Rect& domain() const { return domain_; }

  std::pair<double, double> apply(double x, double y) const;
  std::pair<double, double> invert(double xp, double yp) const;
  double weight(double x, double y) const;  // h

  bool in_domain(double x, double y) const;
  void require_in_domain(double x, double y) const;

 private:
  TransformSpec() = default;

  Kind kind_ = Kind::affine;
  std::string label_;
  double a_ = 1.0, b_ = 0.0, c_ = 1.0;
  bool flip_x_ = false, flip_y_ = false;
  Rect domain_;
  double domain_margin_ = 0.0;  // numeraire keeps support away from the pole
  std::function<std::pair<double, double>(double, double)> fwd_, inv_;
  std::function<double(double, double)> h_;
};

// Pushes each atom (x, y, m) to (T(x,y), m h(x,y)). Total mass is generally
// not preserved.
Coupling transform_measure(const TransformSpec& spec, const Coupling& pi);

// Pulls back: (x', y', m) -> (T^{-1}(x',y'), m / h(T^{-1}(x',y'))).
Coupling inverse_transform_measure(const TransformSpec& spec, const Coupling& pi_prime);

// c'(x', y') = (c / h) o T^{-1} (x', y').
CostFunction transform_cost(const TransformSpec& spec, const CostFunction& cost);

SupportSet transform_support(const TransformSpec& spec, const SupportSet& xi);

struct PreservationReport {
  bool preserving = true;
  long long pairs_tested = 0;
  // Image-domain competitor pair whose pullbacks are not competitors.
  std::optional<std::pair<Coupling, Coupling>> counterexample;
  C123Result failure;
};

// Samples competitor pairs on the image grid (canonical three-point pairs in
// lexicographic order, then randomized polytope points obtained by minimizing
// random objectives over competitors), pulls each pair back and verifies
// C1-C3. `trials` bounds the total number of pairs.
PreservationReport is_competitor_preserving(const TransformSpec& spec,
                                            std::span<const double> x_grid,
                                            std::span<const double> y_grid,
                                            int trials, std::uint64_t seed,
                                            double tol = 1e-9);

struct MartingalePreservationReport {
  bool preserving = true;
  std::optional<double> witness_x;
  double worst_deviation = 0.0;
};

// Checks that rho(x,y) = (t(y) - s(x)) h(y) / (y - x) is constant in y for
// every sampled x, the martingale preservation identity.
MartingalePreservationReport preserves_martingale(const TransformSpec& spec,
                                                  std::span<const double> x_samples,
                                                  std::span<const double> y_samples,
                                                  double tol = 1e-9);

struct MassCheck {
  double total_mass = 0.0;
  bool is_probability = false;
};

// Total mass of the numeraire transform of pi; equals 1 exactly when
// 1/c + b matches the common marginal mean of a martingale coupling.
MassCheck numeraire_mass_check(const Coupling& pi, const TransformSpec& spec);

enum class TransformCase { affine_case, numeraire_case, not_preserving };

const char* to_string(TransformCase c);

struct Classification {
  TransformCase kind = TransformCase::not_preserving;
  double a = 0.0, b = 0.0, c = 0.0;  // fitted parameters
  std::string witness;               // dependence or fit-failure description
  std::optional<std::pair<Coupling, Coupling>> counterexample;
  C123Result failure;
};

// Black-box pipeline: grid dependence tests for s, t, h; model fits of h
// (constant vs affine) and t (affine vs reciprocal about the h pole);
// confirmation via is_competitor_preserving.
Classification classify(const TransformSpec& black_box,
                        std::span<const double> x_grid,
                        std::span<const double> y_grid, int trials,
                        std::uint64_t seed);

}  // namespace motforge
