#include <doctest.h>

#include <cmath>
#include <vector>

#include "motforge/monotone.hpp"
#include "motforge/mot.hpp"
#include "motforge/rng.hpp"
#include "motforge/transform.hpp"
#include "support/instances.hpp"

using namespace motforge;

namespace {

Rect positive_rect() {
  Rect r;
  r.x.lo = 0.0;
  r.y.lo = 0.0;
  return r;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

}  // namespace

TEST_CASE("transform_measure on the declared families") {
  const Coupling mirrored =
      transform_measure(TransformSpec::mirror(true, false), Coupling({{1, 2, 1}}));
  CHECK(mirrored.entries()[0].x == -1.0);
  CHECK(mirrored.entries()[0].y == 2.0);

  // numeraire on a mean-1 martingale pair
  const TransformSpec num = TransformSpec::numeraire(1, 0, 1, positive_rect());
  const Coupling img =
      transform_measure(num, Coupling({{1, 0.5, 0.5}, {1, 1.5, 0.5}}));
  REQUIRE(img.size() == 2);
  CHECK(img.entries()[0].x == doctest::Approx(1.0));
  CHECK(img.entries()[0].y == doctest::Approx(2.0 / 3));
  CHECK(img.entries()[0].mass == doctest::Approx(0.75));
  CHECK(img.entries()[1].y == doctest::Approx(2.0));
  CHECK(img.entries()[1].mass == doctest::Approx(0.25));
  CHECK(img.total_mass() == doctest::Approx(1.0).epsilon(1e-12));

  const Coupling aff =
      transform_measure(TransformSpec::affine(2, 1), Coupling({{0, 1, 1}}));
  CHECK(aff.entries()[0].x == 1.0);
  CHECK(aff.entries()[0].y == 3.0);
}

TEST_CASE("inverse transform round trips") {
  const TransformSpec num = TransformSpec::numeraire(1, 0, 1, positive_rect());
  const Coupling pi({{1, 0.5, 0.5}, {1, 1.5, 0.5}});
  const Coupling back = inverse_transform_measure(num, transform_measure(num, pi));
  REQUIRE(back.size() == pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) {
    CHECK(back.entries()[i].x == doctest::Approx(pi.entries()[i].x).epsilon(1e-12));
    CHECK(back.entries()[i].y == doctest::Approx(pi.entries()[i].y).epsilon(1e-12));
    CHECK(back.entries()[i].mass ==
          doctest::Approx(pi.entries()[i].mass).epsilon(1e-12));
  }

  const Coupling aff_back = inverse_transform_measure(
      TransformSpec::affine(2, 1), Coupling({{1, 3, 1}}));
  CHECK(aff_back.entries()[0].x == doctest::Approx(0.0));
  CHECK(aff_back.entries()[0].y == doctest::Approx(1.0));

  // round trip identity on random couplings, all spec variants
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Coupling q = testing::random_martingale_coupling(seed, 5, 1.0, 3.0);
    for (const TransformSpec& spec :
         {TransformSpec::affine(1.7, -0.3), TransformSpec::mirror(true, true),
          TransformSpec::numeraire(2, 0.1, 0.7, positive_rect())}) {
      const Coupling rt = inverse_transform_measure(spec, transform_measure(spec, q));
      REQUIRE(rt.size() == q.size());
      double worst = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i)
        worst = std::max(worst,
                         std::abs(rt.entries()[i].mass - q.entries()[i].mass));
      CHECK(worst <= 1e-12);
    }
  }
}

TEST_CASE("transform_cost reproduces the worked examples") {
  const TransformSpec num = TransformSpec::numeraire(1, 0, 1, positive_rect());
  const CostFunction cn = transform_cost(num, CostFunction::abs_diff_neg());
  const CostFunction builtin_n = CostFunction::numeraire_abs();
  for (double x : {0.5, 1.0, 2.5})
    for (double y : {0.4, 1.1, 3.0})
      CHECK(cn(x, y) == doctest::Approx(builtin_n(x, y)).epsilon(1e-10));

  const CostFunction cm =
      transform_cost(TransformSpec::mirror(true, false), CostFunction::abs_diff_neg());
  const CostFunction builtin_m = CostFunction::mirrored_abs();
  for (double x : {-1.0, 0.3, 2.0})
    for (double y : {-0.7, 0.0, 1.5})
      CHECK(cm(x, y) == doctest::Approx(builtin_m(x, y)).epsilon(1e-12));

  const CostFunction id_cost =
      transform_cost(TransformSpec::affine(1, 0), CostFunction::cubic());
  CHECK(id_cost(0.3, 1.2) == doctest::Approx(CostFunction::cubic()(0.3, 1.2)));
}

TEST_CASE("cost integrals are invariant under the transform pair") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Coupling q = testing::random_martingale_coupling(seed, 5, 1.0, 3.0);
    for (const TransformSpec& spec :
         {TransformSpec::affine(0.8, 2.0), TransformSpec::mirror(true, false),
          TransformSpec::numeraire(1, 0, 1, positive_rect())}) {
      const CostFunction c = CostFunction::abs_diff_neg();
      const CostFunction cp = transform_cost(spec, c);
      const Coupling img = transform_measure(spec, q);
      double before = 0.0, after = 0.0;
      for (const auto& e : q.entries()) before += c(e.x, e.y) * e.mass;
      for (const auto& e : img.entries()) after += cp(e.x, e.y) * e.mass;
      CHECK(after == doctest::Approx(before).epsilon(1e-10));
    }
  }
}

TEST_CASE("transform_support flips the monotone pattern") {
  const SupportSet left_ok = SupportSet::of({{0, -1}, {0, 1}, {-1, 0}});
  const SupportSet flipped =
      transform_support(TransformSpec::mirror(true, false), left_ok);
  CHECK(flipped.points ==
        std::vector<std::pair<double, double>>{{0, -1}, {0, 1}, {1, 0}});
  CHECK(check_left_monotone(flipped).has_value());
  CHECK_FALSE(check_right_monotone(flipped).has_value());

  const TransformSpec id = TransformSpec::affine(1, 0);
  CHECK(transform_support(id, left_ok).points == left_ok.points);
}

TEST_CASE("monotonicity pushes forward through the mirror") {
  const DiscreteMeasure mu = make_measure(std::vector<double>{-1.0, 1.0},
                                          std::vector<double>{0.5, 0.5});
  const DiscreteMeasure nu =
      make_measure(std::vector<double>{-2.0, 0.0, 2.0},
                   std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3});
  const MotSolution sol = solve_mot(mu, nu, CostFunction::sm_neg(), Sense::min);
  REQUIRE(sol.status == LpStatus::optimal);
  const TransformSpec mirror = TransformSpec::mirror(true, false);
  const SupportSet image = transform_support(mirror, support(sol.coupling));
  const CostFunction cost_p = transform_cost(mirror, CostFunction::sm_neg());
  const MonotoneReport r = is_finitely_monotone(image, cost_p, 4, 100, 3);
  CHECK(r.monotone);
}

TEST_CASE("is_competitor_preserving separates the families") {
  const std::vector<double> xg = linspace(-1.5, 1.5, 5);
  const std::vector<double> yg = linspace(-2, 2, 6);

  const PreservationReport aff =
      is_competitor_preserving(TransformSpec::affine(2, 1), xg, yg, 300, 1);
  CHECK(aff.preserving);
  CHECK(aff.pairs_tested == 300);

  const std::vector<double> xp = linspace(0.5, 2.5, 5);
  const std::vector<double> yp = linspace(0.4, 3.0, 6);
  const PreservationReport num = is_competitor_preserving(
      TransformSpec::numeraire(1, 0, 1, positive_rect()), xp, yp, 300, 1);
  CHECK(num.preserving);

  Rect box;
  box.x = {1.0, 2.0};
  box.y = {1.0, 2.0};
  const TransformSpec cube = TransformSpec::custom(
      "y_cubed",
      [](double x, double y) { return std::pair{x, y * y * y}; },
      [](double, double) { return 1.0; },
      [](double x, double y) { return std::pair{x, std::cbrt(y)}; }, box);
  const PreservationReport bad =
      is_competitor_preserving(cube, linspace(1.1, 1.9, 4), linspace(1.1, 1.9, 5),
                               1000, 1);
  CHECK_FALSE(bad.preserving);
  REQUIRE(bad.counterexample.has_value());
  REQUIRE(bad.failure.failed.has_value());
  CHECK(*bad.failure.failed == CompetitorCondition::C3);
}

TEST_CASE("preserves_martingale identities") {
  const std::vector<double> xs = linspace(0.5, 2.0, 5);
  const std::vector<double> ys = linspace(0.3, 2.5, 7);
  CHECK(preserves_martingale(TransformSpec::affine(3, -2), xs, ys).preserving);
  CHECK(preserves_martingale(TransformSpec::numeraire(1, 0, 1, positive_rect()),
                             xs, ys)
            .preserving);
  const MartingalePreservationReport mir =
      preserves_martingale(TransformSpec::mirror(true, false), xs, ys);
  CHECK_FALSE(mir.preserving);
  CHECK(mir.witness_x.has_value());
}

TEST_CASE("numeraire mass check") {
  const TransformSpec unit = TransformSpec::numeraire(1, 0, 1, positive_rect());
  const MassCheck a =
      numeraire_mass_check(Coupling({{1, 0.5, 0.5}, {1, 1.5, 0.5}}), unit);
  CHECK(a.total_mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.is_probability);

  const MassCheck b = numeraire_mass_check(Coupling({{2, 2, 1}}), unit);
  CHECK(b.total_mass == doctest::Approx(2.0));
  CHECK_FALSE(b.is_probability);

  const TransformSpec halved = TransformSpec::numeraire(1, 0, 0.5, positive_rect());
  const MassCheck c = numeraire_mass_check(Coupling({{2, 2, 1}}), halved);
  CHECK(c.total_mass == doctest::Approx(1.0));
  CHECK(c.is_probability);
}

TEST_CASE("classify recovers declared parameters") {
  const std::vector<double> xg = linspace(-1.5, 2.0, 6);
  const std::vector<double> yg = linspace(-2, 2.5, 7);
  const Classification aff = classify(TransformSpec::affine(3, -1), xg, yg, 200, 5);
  CHECK(aff.kind == TransformCase::affine_case);
  CHECK(aff.a == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(aff.b == doctest::Approx(-1.0).epsilon(1e-9));

  Rect dom;
  dom.x = {1.0, 5.0};
  dom.y = {1.0, 5.0};
  const std::vector<double> pg = linspace(1.2, 4.8, 6);
  const Classification num =
      classify(TransformSpec::numeraire(2, 1, 1, dom), pg, pg, 200, 5);
  CHECK(num.kind == TransformCase::numeraire_case);
  CHECK(num.a == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(num.b == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(num.c == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("classify rejects an x-dependent map with a concrete pair") {
  Rect box;
  box.x = {-2.0, 2.0};
  box.y = {-2.0, 2.0};
  const TransformSpec shear = TransformSpec::custom(
      "shear",
      [](double x, double y) { return std::pair{x, y + x}; },
      [](double, double) { return 1.0; },
      [](double x, double y) { return std::pair{x, y - x}; }, box);
  const Classification cl =
      classify(shear, linspace(-1.5, 1.5, 5), linspace(-1.5, 1.5, 5), 500, 5);
  CHECK(cl.kind == TransformCase::not_preserving);
  CHECK(cl.witness == "t depends on x");
  CHECK(cl.counterexample.has_value());
}
