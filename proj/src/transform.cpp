#include "motforge/transform.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "motforge/rng.hpp"

namespace motforge {

namespace {

double clip(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace

TransformSpec TransformSpec::affine(double a, double b, Rect domain) {
  if (a == 0.0) throw std::invalid_argument("affine transform: a must be nonzero");
  TransformSpec s;
  s.kind_ = Kind::affine;
  s.label_ = "affine";
  s.a_ = a;
  s.b_ = b;
  s.domain_ = domain;
  return s;
}

TransformSpec TransformSpec::numeraire(double a, double b, double c, Rect domain) {
  if (a <= 0.0 || c <= 0.0)
    throw std::invalid_argument("numeraire transform: a and c must be positive");
  TransformSpec s;
  s.kind_ = Kind::numeraire;
  s.label_ = "numeraire";
  s.a_ = a;
  s.b_ = b;
  s.c_ = c;
  s.domain_ = domain;
  s.domain_.x.lo = std::max(domain.x.lo, b);
  s.domain_.y.lo = std::max(domain.y.lo, b);
  s.domain_margin_ = 1e-9;  // keeps support clear of the pole at b
  return s;
}

TransformSpec TransformSpec::mirror(bool flip_x, bool flip_y) {
  TransformSpec s;
  s.kind_ = Kind::mirror;
  s.label_ = flip_x && flip_y ? "mirror_xy" : (flip_x ? "mirror_x" : "mirror_y");
  s.flip_x_ = flip_x;
  s.flip_y_ = flip_y;
  return s;
}

TransformSpec TransformSpec::custom(
    std::string label,
    std::function<std::pair<double, double>(double, double)> fwd,
    std::function<double(double, double)> h,
    std::function<std::pair<double, double>(double, double)> inv, Rect domain) {
  TransformSpec s;
  s.kind_ = Kind::custom;
  s.label_ = std::move(label);
  s.fwd_ = std::move(fwd);
  s.h_ = std::move(h);
  s.inv_ = std::move(inv);
  s.domain_ = domain;

  // Spot check inverse o T = id and h > 0 on a sample of the domain.
  const double xlo = clip(domain.x.lo, -2.0, 2.0), xhi = clip(domain.x.hi, -2.0, 2.0);
  const double ylo = clip(domain.y.lo, -2.0, 2.0), yhi = clip(domain.y.hi, -2.0, 2.0);
  const int K = 5;
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) {
      const double x = xlo + (xhi - xlo) * i / (K - 1);
      const double y = ylo + (yhi - ylo) * j / (K - 1);
      if (!s.in_domain(x, y)) continue;
      if (s.h_(x, y) <= 0.0)
        throw std::invalid_argument("custom transform: h must be positive");
      const auto [xp, yp] = s.fwd_(x, y);
      const auto [xr, yr] = s.inv_(xp, yp);
      if (std::abs(xr - x) > 1e-9 * (1 + std::abs(x)) ||
          std::abs(yr - y) > 1e-9 * (1 + std::abs(y)))
        throw std::invalid_argument("custom transform: inverse o T != id on domain");
    }
  return s;
}

std::pair<double, double> TransformSpec::apply(double x, double y) const {
  switch (kind_) {
    case Kind::affine: return {a_ * x + b_, a_ * y + b_};
    case Kind::numeraire: return {a_ / (x - b_), a_ / (y - b_)};
    case Kind::mirror: return {flip_x_ ? -x : x, flip_y_ ? -y : y};
    case Kind::custom: return fwd_(x, y);
  }
  return {x, y};
}

std::pair<double, double> TransformSpec::invert(double xp, double yp) const {
  switch (kind_) {
    case Kind::affine: return {(xp - b_) / a_, (yp - b_) / a_};
    case Kind::numeraire: return {b_ + a_ / xp, b_ + a_ / yp};
    case Kind::mirror: return {flip_x_ ? -xp : xp, flip_y_ ? -yp : yp};
    case Kind::custom: return inv_(xp, yp);
  }
  return {xp, yp};
}

double TransformSpec::weight(double x, double y) const {
  switch (kind_) {
    case Kind::affine:
    case Kind::mirror: return 1.0;
    case Kind::numeraire: return c_ * (y - b_);
    case Kind::custom: return h_(x, y);
  }
  return 1.0;
}

bool TransformSpec::in_domain(double x, double y) const {
  const double m = domain_margin_;
  return x > domain_.x.lo + m && x < domain_.x.hi - m && y > domain_.y.lo + m &&
         y < domain_.y.hi - m;
}

void TransformSpec::require_in_domain(double x, double y) const {
  if (!in_domain(x, y))
    throw std::domain_error("transform: point (" + std::to_string(x) + ", " +
                            std::to_string(y) + ") outside the " + label_ +
                            " domain");
}

Coupling transform_measure(const TransformSpec& spec, const Coupling& pi) {
  std::vector<CouplingEntry> out;
  out.reserve(pi.size());
  for (const auto& e : pi.entries()) {
    spec.require_in_domain(e.x, e.y);
    const auto [xp, yp] = spec.apply(e.x, e.y);
    out.push_back({xp, yp, e.mass * spec.weight(e.x, e.y)});
  }
  return Coupling(std::move(out));
}

Coupling inverse_transform_measure(const TransformSpec& spec,
                                   const Coupling& pi_prime) {
  std::vector<CouplingEntry> out;
  out.reserve(pi_prime.size());
  for (const auto& e : pi_prime.entries()) {
    const auto [x, y] = spec.invert(e.x, e.y);
    // The preimage must be in the domain and map back to the image atom.
    if (!spec.in_domain(x, y))
      throw std::domain_error("inverse transform: image atom outside range of T");
    const auto [xr, yr] = spec.apply(x, y);
    if (std::abs(xr - e.x) > 1e-9 * (1 + std::abs(e.x)) ||
        std::abs(yr - e.y) > 1e-9 * (1 + std::abs(e.y)))
      throw std::domain_error("inverse transform: image atom outside range of T");
    out.push_back({x, y, e.mass / spec.weight(x, y)});
  }
  return Coupling(std::move(out));
}

CostFunction transform_cost(const TransformSpec& spec, const CostFunction& cost) {
  TransformSpec copy = spec;
  CostFunction base = cost;
  return CostFunction::composite(
      "pushforward(" + spec.label() + ", " + cost.name() + ")",
      [copy, base](double xp, double yp) {
        const auto [x, y] = copy.invert(xp, yp);
        return base(x, y) / copy.weight(x, y);
      });
}

SupportSet transform_support(const TransformSpec& spec, const SupportSet& xi) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(xi.points.size());
  for (const auto& [x, y] : xi.points) {
    spec.require_in_domain(x, y);
    pts.push_back(spec.apply(x, y));
  }
  return SupportSet::of(std::move(pts));
}

namespace {

struct PairCheck {
  bool checked = false;
  bool ok = true;
};

// Pulls an image-domain competitor pair back and verifies C1-C3.
PairCheck check_pair(const TransformSpec& spec, const Coupling& alpha_p,
                     const Coupling& beta_p, double tol,
                     PreservationReport& report) {
  Coupling alpha, beta;
  try {
    alpha = inverse_transform_measure(spec, alpha_p);
    beta = inverse_transform_measure(spec, beta_p);
  } catch (const std::domain_error&) {
    return {false, true};  // pair not in the transform's range; skip
  }
  report.pairs_tested++;
  const C123Result r = verify_C123(alpha, beta, tol);
  if (!r.ok) {
    report.preserving = false;
    report.counterexample = {alpha_p, beta_p};
    report.failure = r;
    return {true, false};
  }
  return {true, true};
}

Coupling canonical_alpha(double x1, double x2, double y1, double ym, double y2) {
  const double lambda = (y2 - ym) / (y2 - y1);
  return Coupling({{x1, y1, lambda}, {x1, y2, 1.0 - lambda}, {x2, ym, 1.0}});
}

}  // namespace

PreservationReport is_competitor_preserving(const TransformSpec& spec,
                                            std::span<const double> x_grid,
                                            std::span<const double> y_grid,
                                            int trials, std::uint64_t seed,
                                            double tol) {
  if (x_grid.size() < 2 || y_grid.size() < 3)
    throw std::invalid_argument("is_competitor_preserving: grid too small");
  std::vector<double> xs(x_grid.begin(), x_grid.end());
  std::vector<double> ys(y_grid.begin(), y_grid.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());

  PreservationReport report;

  // Canonical three-point pairs in lexicographic order.
  for (std::size_t i1 = 0; i1 < xs.size() && report.preserving; ++i1)
    for (std::size_t i2 = i1 + 1; i2 < xs.size() && report.preserving; ++i2)
      for (std::size_t j1 = 0; j1 < ys.size() && report.preserving; ++j1)
        for (std::size_t jm = j1 + 1; jm < ys.size() && report.preserving; ++jm)
          for (std::size_t j2 = jm + 1; j2 < ys.size() && report.preserving; ++j2) {
            if (report.pairs_tested >= trials) return report;
            const Coupling a = canonical_alpha(xs[i1], xs[i2], ys[j1], ys[jm], ys[j2]);
            const Coupling b = canonical_alpha(xs[i2], xs[i1], ys[j1], ys[jm], ys[j2]);
            check_pair(spec, a, b, tol, report);
          }

  // Randomized polytope pairs: a random measure on the grid and the minimizer
  // of a random objective over its competitors. Attempts are bounded: pairs
  // that leave the transform's range are skipped, not counted.
  const long long max_attempts = 50LL * trials + 1000;
  for (long long t = 0;
       report.preserving && report.pairs_tested < trials && t < max_attempts; ++t) {
    auto eng = make_engine(seed, static_cast<std::uint64_t>(t));
    const int npts = 3 + static_cast<int>(uniform_index(eng, 3));
    std::vector<CouplingEntry> es;
    for (int p = 0; p < npts; ++p) {
      const double x = xs[uniform_index(eng, xs.size())];
      const double y = ys[uniform_index(eng, ys.size())];
      es.push_back({x, y, 0.2 + uniform01(eng)});
    }
    const Coupling alpha_p{std::move(es)};
    // Random tabulated objective over the support rectangle.
    const auto [m0, m1] = marginals(alpha_p);
    std::vector<double> gx, gy;
    for (const auto& a : m0.atoms()) gx.push_back(a.position);
    for (const auto& a : m1.atoms()) gy.push_back(a.position);
    if (gx.size() < 2 || gy.size() < 2) continue;
    std::vector<double> vals(gx.size() * gy.size());
    for (double& v : vals) v = uniform(eng, -1.0, 1.0);
    const CostFunction obj = CostFunction::tabulated(gx, gy, vals);
    const Coupling beta_p = min_over_competitors(alpha_p, obj).beta;
    check_pair(spec, alpha_p, beta_p, tol, report);
  }
  return report;
}

MartingalePreservationReport preserves_martingale(const TransformSpec& spec,
                                                  std::span<const double> x_samples,
                                                  std::span<const double> y_samples,
                                                  double tol) {
  MartingalePreservationReport rep;
  for (double x : x_samples) {
    bool have_ref = false;
    double ref = 0.0;
    double worst = 0.0;
    for (double y : y_samples) {
      if (std::abs(y - x) <= 1e-12) continue;
      if (!spec.in_domain(x, y)) continue;
      const auto [sx, ty] = spec.apply(x, y);
      const double rho = (ty - sx) * spec.weight(x, y) / (y - x);
      if (!have_ref) {
        ref = rho;
        have_ref = true;
      } else {
        worst = std::max(worst, std::abs(rho - ref));
      }
    }
    if (!have_ref) continue;
    rep.worst_deviation = std::max(rep.worst_deviation, worst);
    if (worst > tol * (1.0 + std::abs(ref)) && rep.preserving) {
      rep.preserving = false;
      rep.witness_x = x;
    }
  }
  return rep;
}

MassCheck numeraire_mass_check(const Coupling& pi, const TransformSpec& spec) {
  if (spec.kind() != TransformSpec::Kind::numeraire)
    throw std::invalid_argument("numeraire_mass_check: spec must be numeraire");
  if (std::abs(pi.total_mass() - 1.0) > 1e-9)
    throw std::invalid_argument("numeraire_mass_check: pi must be a probability");
  const Coupling image = transform_measure(spec, pi);
  MassCheck mc;
  mc.total_mass = image.total_mass();
  mc.is_probability = std::abs(mc.total_mass - 1.0) <= 1e-9;
  return mc;
}

const char* to_string(TransformCase c) {
  switch (c) {
    case TransformCase::affine_case: return "affine";
    case TransformCase::numeraire_case: return "numeraire";
    case TransformCase::not_preserving: return "not_preserving";
  }
  return "?";
}

namespace {

// Least-squares fit of values ~ sum coeff_k basis_k; returns max |residual|.
double fit_basis(const std::vector<double>& args,
                 const std::vector<double>& values,
                 const std::vector<std::function<double(double)>>& basis,
                 std::vector<double>* coeffs) {
  const int n = static_cast<int>(args.size());
  const int k = static_cast<int>(basis.size());
  Eigen::MatrixXd M(n, k);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) M(i, j) = basis[j](args[i]);
    rhs(i) = values[i];
  }
  Eigen::VectorXd sol = M.colPivHouseholderQr().solve(rhs);
  coeffs->assign(sol.data(), sol.data() + k);
  return (M * sol - rhs).cwiseAbs().maxCoeff();
}

}  // namespace

Classification classify(const TransformSpec& black_box,
                        std::span<const double> x_grid,
                        std::span<const double> y_grid, int trials,
                        std::uint64_t seed) {
  constexpr double kFitTol = 1e-9;
  std::vector<double> xs(x_grid.begin(), x_grid.end());
  std::vector<double> ys(y_grid.begin(), y_grid.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());

  Classification cl;
  auto not_preserving = [&](const std::string& why) {
    cl.kind = TransformCase::not_preserving;
    cl.witness = why;
    const PreservationReport rep =
        is_competitor_preserving(black_box, xs, ys, trials, seed);
    if (!rep.preserving) {
      cl.counterexample = rep.counterexample;
      cl.failure = rep.failure;
    }
    return cl;
  };

  // (i) Separation: s must not depend on y; t and h must not depend on x.
  double s_dep = 0.0, t_dep = 0.0, h_dep = 0.0;
  for (double x : xs) {
    double slo = 0, shi = 0;
    bool first = true;
    for (double y : ys) {
      if (!black_box.in_domain(x, y)) continue;
      const double s = black_box.apply(x, y).first;
      if (first) { slo = shi = s; first = false; }
      slo = std::min(slo, s);
      shi = std::max(shi, s);
    }
    s_dep = std::max(s_dep, shi - slo);
  }
  for (double y : ys) {
    double tlo = 0, thi = 0, hlo = 0, hhi = 0;
    bool first = true;
    for (double x : xs) {
      if (!black_box.in_domain(x, y)) continue;
      const double t = black_box.apply(x, y).second;
      const double h = black_box.weight(x, y);
      if (first) { tlo = thi = t; hlo = hhi = h; first = false; }
      tlo = std::min(tlo, t);
      thi = std::max(thi, t);
      hlo = std::min(hlo, h);
      hhi = std::max(hhi, h);
    }
    t_dep = std::max(t_dep, thi - tlo);
    h_dep = std::max(h_dep, hhi - hlo);
  }
  if (s_dep > kFitTol) return not_preserving("s depends on y");
  if (t_dep > kFitTol) return not_preserving("t depends on x");
  if (h_dep > kFitTol) return not_preserving("h depends on x");

  // (ii) Fit h over y: constant, else affine h(y) = c (y - b).
  const double x0 = xs.front();
  std::vector<double> yy, hh, tt;
  for (double y : ys) {
    if (!black_box.in_domain(x0, y)) continue;
    yy.push_back(y);
    hh.push_back(black_box.weight(x0, y));
    tt.push_back(black_box.apply(x0, y).second);
  }
  if (yy.size() < 3) throw std::invalid_argument("classify: grid too small");

  const double h_spread =
      *std::max_element(hh.begin(), hh.end()) - *std::min_element(hh.begin(), hh.end());
  std::vector<double> coef;
  if (h_spread <= kFitTol) {
    // (iii) h constant: t must be affine in y.
    const double res = fit_basis(
        yy, tt, {[](double) { return 1.0; }, [](double y) { return y; }}, &coef);
    if (res > kFitTol) return not_preserving("h constant but t not affine in y");
    cl.kind = TransformCase::affine_case;
    cl.a = coef[1];
    cl.b = coef[0];
  } else {
    const double res_h = fit_basis(
        yy, hh, {[](double) { return 1.0; }, [](double y) { return y; }}, &coef);
    if (res_h > kFitTol) return not_preserving("h neither constant nor affine in y");
    const double slope = coef[1], icept = coef[0];
    if (slope == 0.0) return not_preserving("degenerate h fit");
    const double b = -icept / slope;
    const double res_t = fit_basis(
        yy, tt,
        {[b](double y) { return 1.0 / (y - b); }, [](double) { return 1.0; }},
        &coef);
    if (res_t > kFitTol)
      return not_preserving("h affine but t not reciprocal about its root");
    cl.kind = TransformCase::numeraire_case;
    cl.a = coef[0];
    cl.b = b;
    cl.c = slope;
    if (std::abs(coef[1]) > kFitTol)
      cl.witness = "t carries a constant offset " + std::to_string(coef[1]);
  }

  // (iv) Confirm on competitor pairs; a fit can be coincidental on the grid.
  const PreservationReport rep =
      is_competitor_preserving(black_box, xs, ys, trials, seed);
  if (!rep.preserving) {
    cl.kind = TransformCase::not_preserving;
    cl.witness = "model fit passed but a competitor pair fails";
    cl.counterexample = rep.counterexample;
    cl.failure = rep.failure;
  }
  return cl;
}

}  // namespace motforge
