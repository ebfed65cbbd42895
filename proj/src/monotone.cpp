#include "motforge/monotone.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "motforge/lp.hpp"
#include "motforge/rng.hpp"

namespace motforge {

namespace {

constexpr double kGapTol = 1e-7;        // improvement below this is a violation
constexpr double kCertifyTol = 1e-9;    // probe gap within this certifies the subset
constexpr double kMergeTol = 1e-9;      // position merge when comparing measures

// Competitor polytope data for a finitely supported alpha on xs x ys.
struct CompetitorGrid {
  std::vector<double> xs, ys;
  std::vector<double> row_mass;   // per x
  std::vector<double> row_ysum;   // per x: sum of y * mass
  std::vector<double> col_mass;   // per y
  double alpha_cost = 0.0;
};

CompetitorGrid grid_from(const Coupling& alpha, const CostFunction& cost) {
  CompetitorGrid g;
  for (const auto& e : alpha.entries()) {
    g.xs.push_back(e.x);
    g.ys.push_back(e.y);
  }
  std::sort(g.xs.begin(), g.xs.end());
  g.xs.erase(std::unique(g.xs.begin(), g.xs.end()), g.xs.end());
  std::sort(g.ys.begin(), g.ys.end());
  g.ys.erase(std::unique(g.ys.begin(), g.ys.end()), g.ys.end());
  g.row_mass.assign(g.xs.size(), 0.0);
  g.row_ysum.assign(g.xs.size(), 0.0);
  g.col_mass.assign(g.ys.size(), 0.0);
  for (const auto& e : alpha.entries()) {
    const std::size_t i =
        std::lower_bound(g.xs.begin(), g.xs.end(), e.x) - g.xs.begin();
    const std::size_t j =
        std::lower_bound(g.ys.begin(), g.ys.end(), e.y) - g.ys.begin();
    g.row_mass[i] += e.mass;
    g.row_ysum[i] += e.y * e.mass;
    g.col_mass[j] += e.mass;
    g.alpha_cost += cost(e.x, e.y) * e.mass;
  }
  return g;
}

// Solves min sum c(x_i,y_j) b_ij over the competitor polytope of the grid.
LpResult solve_competitor_lp(const CompetitorGrid& g, const CostFunction& cost,
                             SimplexSolver& solver, std::vector<double>& A,
                             std::vector<double>& b, std::vector<double>& c) {
  const int nx = static_cast<int>(g.xs.size());
  const int ny = static_cast<int>(g.ys.size());
  const int nvar = nx * ny;
  const int nrow = nx + ny + nx;
  A.assign(static_cast<std::size_t>(nrow) * nvar, 0.0);
  b.assign(nrow, 0.0);
  c.assign(nvar, 0.0);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const int v = i * ny + j;
      c[v] = cost(g.xs[i], g.ys[j]);
      A[static_cast<std::size_t>(i) * nvar + v] = 1.0;
      A[static_cast<std::size_t>(nx + j) * nvar + v] = 1.0;
      A[static_cast<std::size_t>(nx + ny + i) * nvar + v] = g.ys[j];
    }
    b[i] = g.row_mass[i];
    b[nx + ny + i] = g.row_ysum[i];
  }
  for (int j = 0; j < ny; ++j) b[nx + j] = g.col_mass[j];
  return solver.solve(nrow, nvar, A.data(), b.data(), c.data());
}

Coupling coupling_from_lp(const CompetitorGrid& g, const std::vector<double>& x) {
  std::vector<CouplingEntry> entries;
  const std::size_t ny = g.ys.size();
  for (std::size_t i = 0; i < g.xs.size(); ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const double v = x[i * ny + j];
      if (v > 0.0) entries.push_back({g.xs[i], g.ys[j], v});
    }
  return Coupling(std::move(entries));
}

}  // namespace

CompetitorMinimum min_over_competitors(const Coupling& alpha,
                                       const CostFunction& cost) {
  if (alpha.empty())
    throw std::invalid_argument("min_over_competitors: empty measure");
  CompetitorGrid g = grid_from(alpha, cost);
  SimplexSolver solver;
  std::vector<double> A, b, c;
  LpResult lp = solve_competitor_lp(g, cost, solver, A, b, c);
  if (lp.status != LpStatus::optimal)
    throw std::runtime_error("min_over_competitors: LP not optimal");  // polytope nonempty
  return {lp.value, coupling_from_lp(g, lp.x)};
}

namespace {

struct SubsetContext {
  const std::vector<std::pair<double, double>>* points = nullptr;
  const CostFunction* cost = nullptr;
  SimplexSolver solver;
  std::vector<double> A, b, c;
  std::vector<int> idx;  // current subset

  // Builds the grid for the current subset with the given point weights.
  CompetitorGrid grid(std::span<const double> weights) {
    CompetitorGrid g;
    for (int p : idx) {
      g.xs.push_back((*points)[p].first);
      g.ys.push_back((*points)[p].second);
    }
    std::sort(g.xs.begin(), g.xs.end());
    g.xs.erase(std::unique(g.xs.begin(), g.xs.end()), g.xs.end());
    std::sort(g.ys.begin(), g.ys.end());
    g.ys.erase(std::unique(g.ys.begin(), g.ys.end()), g.ys.end());
    g.row_mass.assign(g.xs.size(), 0.0);
    g.row_ysum.assign(g.xs.size(), 0.0);
    g.col_mass.assign(g.ys.size(), 0.0);
    for (std::size_t t = 0; t < idx.size(); ++t) {
      const auto& [x, y] = (*points)[idx[t]];
      const double w = weights[t];
      const std::size_t i = std::lower_bound(g.xs.begin(), g.xs.end(), x) - g.xs.begin();
      const std::size_t j = std::lower_bound(g.ys.begin(), g.ys.end(), y) - g.ys.begin();
      g.row_mass[i] += w;
      g.row_ysum[i] += y * w;
      g.col_mass[j] += w;
      g.alpha_cost += (*cost)(x, y) * w;
    }
    return g;
  }

  Coupling alpha_coupling(std::span<const double> weights) const {
    std::vector<CouplingEntry> es;
    for (std::size_t t = 0; t < idx.size(); ++t)
      es.push_back({(*points)[idx[t]].first, (*points)[idx[t]].second, weights[t]});
    return Coupling(std::move(es));
  }
};

// Runs one weighted test; returns the gap (min - alpha(c)).
double run_case(SubsetContext& ctx, std::span<const double> weights,
                MonotoneReport& report, std::optional<CompetitorCertificate>& cert) {
  CompetitorGrid g = ctx.grid(weights);
  report.lp_solves++;
  LpResult lp = solve_competitor_lp(g, *ctx.cost, ctx.solver, ctx.A, ctx.b, ctx.c);
  if (lp.status != LpStatus::optimal)
    throw std::runtime_error("is_finitely_monotone: competitor LP not optimal");
  const double gap = lp.value - g.alpha_cost;
  if (gap < -kGapTol && !cert) {
    cert = CompetitorCertificate{ctx.alpha_coupling(weights),
                                 coupling_from_lp(g, lp.x), gap};
  }
  return gap;
}

}  // namespace

MonotoneReport is_finitely_monotone(const SupportSet& xi, const CostFunction& cost,
                                    int max_support, int trials,
                                    std::uint64_t seed) {
  if (max_support < 2)
    throw std::invalid_argument("is_finitely_monotone: max_support must be >= 2");
  MonotoneReport report;
  const auto& pts = xi.points;
  const int n = static_cast<int>(pts.size());
  if (n == 0) return report;

  SubsetContext ctx;
  ctx.points = &pts;
  ctx.cost = &cost;

  std::optional<CompetitorCertificate> cert;
  std::vector<double> weights;
  std::uint64_t ordinal = 0;

  for (int s = 1; s <= std::min(max_support, n) && !cert; ++s) {
    // Lexicographic combinations of size s.
    std::vector<int>& idx = ctx.idx;
    idx.resize(s);
    for (int i = 0; i < s; ++i) idx[i] = i;
    for (;;) {
      ++ordinal;
      report.subsets++;

      // Subsets spanning a single row or column have a singleton competitor
      // polytope; nothing to test.
      bool one_x = true, one_y = true;
      for (int i = 1; i < s; ++i) {
        one_x = one_x && pts[idx[i]].first == pts[idx[0]].first;
        one_y = one_y && pts[idx[i]].second == pts[idx[0]].second;
      }
      if (!one_x && !one_y) {
        // Canonical three-point family: two points sharing a column and a
        // third whose y lies strictly between, weighted by collinearity.
        if (s == 3 && !cert) {
          for (int a = 0; a < 3 && !cert; ++a)
            for (int bps = a + 1; bps < 3 && !cert; ++bps) {
              const int cps = 3 - a - bps;
              if (pts[idx[a]].first != pts[idx[bps]].first) continue;
              if (pts[idx[cps]].first == pts[idx[a]].first) continue;
              const double y1 = pts[idx[a]].second;
              const double y2 = pts[idx[bps]].second;
              const double ym = pts[idx[cps]].second;
              if (!(ym > y1 && ym < y2)) continue;
              const double lambda = (y2 - ym) / (y2 - y1);
              double w[3] = {0, 0, 0};
              w[a] = lambda;
              w[bps] = 1.0 - lambda;
              w[cps] = 1.0;
              run_case(ctx, std::span<const double>(w, 3), report, cert);
            }
        }
        if (!cert) {
          // Uniform probe. A zero gap here certifies every weighting of the
          // subset (see header), so the random trials can be skipped.
          weights.assign(s, 1.0);
          const double gap = run_case(ctx, weights, report, cert);
          if (!cert && gap < -kCertifyTol) {
            auto eng = make_engine(seed, ordinal);
            for (int t = 0; t < trials && !cert; ++t) {
              report.random_trials++;
              for (double& w : weights) w = 0.05 + 0.95 * uniform01(eng);
              run_case(ctx, weights, report, cert);
            }
          }
        }
      }
      if (cert) break;

      int i = s - 1;
      while (i >= 0 && idx[i] == n - s + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
    }
  }

  if (cert) {
    report.monotone = false;
    report.certificate = std::move(cert);
  }
  return report;
}

std::optional<BlindWitness> is_competitorblind(const CostFunction& f,
                                               std::span<const double> x_grid,
                                               std::span<const double> y_grid,
                                               double tol) {
  if (x_grid.size() < 2 || y_grid.size() < 3)
    throw std::invalid_argument(
        "is_competitorblind: need >= 2 x points and >= 3 y points");
  std::vector<double> xs(x_grid.begin(), x_grid.end());
  std::vector<double> ys(y_grid.begin(), y_grid.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());

  for (std::size_t i1 = 0; i1 < xs.size(); ++i1)
    for (std::size_t i2 = i1 + 1; i2 < xs.size(); ++i2)
      for (std::size_t j1 = 0; j1 < ys.size(); ++j1)
        for (std::size_t jm = j1 + 1; jm < ys.size(); ++jm)
          for (std::size_t j2 = jm + 1; j2 < ys.size(); ++j2) {
            const double y1 = ys[j1], ym = ys[jm], y2 = ys[j2];
            const double lambda = (y2 - ym) / (y2 - y1);
            const double lhs = lambda * f(xs[i1], y1) +
                               (1.0 - lambda) * f(xs[i1], y2) - f(xs[i1], ym);
            const double rhs = lambda * f(xs[i2], y1) +
                               (1.0 - lambda) * f(xs[i2], y2) - f(xs[i2], ym);
            if (std::abs(lhs - rhs) > tol)
              return BlindWitness{xs[i1], xs[i2], y1, ym, y2, lhs, rhs};
          }
  return std::nullopt;
}

BlindDecomposition decompose_competitorblind(const CostFunction& f,
                                             std::span<const double> x_grid,
                                             std::span<const double> y_grid) {
  if (x_grid.size() < 2 || y_grid.size() < 3)
    throw std::invalid_argument(
        "decompose_competitorblind: need >= 2 x points and >= 3 y points");
  std::vector<double> xs(x_grid.begin(), x_grid.end());
  std::vector<double> ys(y_grid.begin(), y_grid.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const int nx = static_cast<int>(xs.size());
  const int ny = static_cast<int>(ys.size());

  // Unknowns: phi (nx), k (nx), psi (ny - 2); psi is gauged to zero at the
  // two smallest grid points since affine parts of psi move into phi and k.
  const int nunk = 2 * nx + ny - 2;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nx * ny, nunk);
  Eigen::VectorXd rhs(nx * ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const int r = i * ny + j;
      M(r, i) = 1.0;
      M(r, nx + i) = ys[j];
      if (j >= 2) M(r, 2 * nx + j - 2) = 1.0;
      rhs(r) = f(xs[i], ys[j]);
    }
  Eigen::VectorXd sol = M.colPivHouseholderQr().solve(rhs);
  const double sse = (M * sol - rhs).squaredNorm();

  BlindDecomposition d;
  d.phi.assign(nx, 0.0);
  d.k.assign(nx, 0.0);
  d.psi.assign(ny, 0.0);
  for (int i = 0; i < nx; ++i) {
    d.phi[i] = sol(i);
    d.k[i] = sol(nx + i);
  }
  for (int j = 2; j < ny; ++j) d.psi[j] = sol(2 * nx + j - 2);
  d.residual = std::sqrt(sse / (nx * ny));
  return d;
}

const char* to_string(CompetitorCondition c) {
  switch (c) {
    case CompetitorCondition::C1: return "C1";
    case CompetitorCondition::C2: return "C2";
    case CompetitorCondition::C3: return "C3";
  }
  return "?";
}

namespace {

// Net signed mass per merged position; returns a position where |net| > tol.
std::optional<double> measures_differ(const DiscreteMeasure& a,
                                      const DiscreteMeasure& b, double tol) {
  struct Signed { double pos, mass; };
  std::vector<Signed> all;
  all.reserve(a.size() + b.size());
  for (const auto& at : a.atoms()) all.push_back({at.position, at.mass});
  for (const auto& at : b.atoms()) all.push_back({at.position, -at.mass});
  std::sort(all.begin(), all.end(),
            [](const Signed& u, const Signed& v) { return u.pos < v.pos; });
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    double net = 0.0;
    while (j < all.size() && all[j].pos - all[i].pos <= kMergeTol) net += all[j++].mass;
    if (std::abs(net) > tol) return all[i].pos;
    i = j;
  }
  return std::nullopt;
}

}  // namespace

C123Result verify_C123(const Coupling& alpha, const Coupling& beta, double tol) {
  const auto [a0, a1] = marginals(alpha);
  const auto [b0, b1] = marginals(beta);
  if (auto w = measures_differ(a0, b0, tol))
    return {false, CompetitorCondition::C1, w};
  if (auto w = measures_differ(a1, b1, tol))
    return {false, CompetitorCondition::C2, w};

  // C3: per merged x, sum (y - x) * mass must agree.
  struct Slice { double x, val; };
  std::vector<Slice> all;
  for (const auto& e : alpha.entries()) all.push_back({e.x, (e.y - e.x) * e.mass});
  for (const auto& e : beta.entries()) all.push_back({e.x, -(e.y - e.x) * e.mass});
  std::sort(all.begin(), all.end(),
            [](const Slice& u, const Slice& v) { return u.x < v.x; });
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    double net = 0.0;
    while (j < all.size() && all[j].x - all[i].x <= kMergeTol) net += all[j++].val;
    if (std::abs(net) > tol)
      return {false, CompetitorCondition::C3, all[i].x};
    i = j;
  }
  return {true, std::nullopt, std::nullopt};
}

}  // namespace motforge
