#include "motforge/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace motforge {

namespace {

std::vector<Atom> canonicalize_atoms(std::vector<Atom> atoms) {
  std::erase_if(atoms, [](const Atom& a) { return a.mass == 0.0; });
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.position) || !std::isfinite(a.mass))
      throw std::invalid_argument("measure atom must be finite");
    if (a.mass < 0.0) throw std::invalid_argument("measure mass must be nonnegative");
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.position < b.position; });
  std::vector<Atom> out;
  out.reserve(atoms.size());
  for (const Atom& a : atoms) {
    if (!out.empty() && a.position - out.back().position <= kPositionTol) {
      out.back().mass += a.mass;
    } else {
      out.push_back(a);
    }
  }
  return out;
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(std::vector<Atom> atoms)
    : atoms_(canonicalize_atoms(std::move(atoms))) {
  total_mass_ = 0.0;
  for (const Atom& a : atoms_) total_mass_ += a.mass;
}

bool DiscreteMeasure::is_probability(double tol) const {
  return std::abs(total_mass_ - 1.0) <= tol;
}

Coupling::Coupling(std::vector<CouplingEntry> entries) {
  std::erase_if(entries, [](const CouplingEntry& e) { return e.mass == 0.0; });
  for (const CouplingEntry& e : entries) {
    if (!std::isfinite(e.x) || !std::isfinite(e.y) || !std::isfinite(e.mass))
      throw std::invalid_argument("coupling entry must be finite");
    if (e.mass < 0.0) throw std::invalid_argument("coupling mass must be nonnegative");
  }
  std::sort(entries.begin(), entries.end(),
            [](const CouplingEntry& a, const CouplingEntry& b) {
              return a.x != b.x ? a.x < b.x : a.y < b.y;
            });
  entries_.reserve(entries.size());
  for (const CouplingEntry& e : entries) {
    if (!entries_.empty() && e.x - entries_.back().x <= kPositionTol &&
        std::abs(e.y - entries_.back().y) <= kPositionTol) {
      entries_.back().mass += e.mass;
    } else {
      entries_.push_back(e);
    }
  }
  total_mass_ = 0.0;
  for (const CouplingEntry& e : entries_) total_mass_ += e.mass;
}

SupportSet SupportSet::of(std::vector<std::pair<double, double>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return SupportSet{std::move(pts)};
}

DiscreteMeasure make_measure(std::span<const double> points,
                             std::span<const double> weights) {
  if (points.size() != weights.size())
    throw std::invalid_argument("make_measure: points/weights length mismatch");
  bool any_positive = false;
  std::vector<Atom> atoms;
  atoms.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (weights[i] < 0.0)
      throw std::invalid_argument("make_measure: negative weight");
    if (weights[i] > 0.0) {
      any_positive = true;
      atoms.push_back({points[i], weights[i]});
    }
  }
  if (!any_positive)
    throw std::invalid_argument("make_measure: all weights are zero");
  return DiscreteMeasure(std::move(atoms));
}

double barycenter(const DiscreteMeasure& m) {
  if (m.total_mass() <= 0.0)
    throw std::invalid_argument("barycenter: zero total mass");
  double s = 0.0;
  for (const Atom& a : m.atoms()) s += a.position * a.mass;
  return s / m.total_mass();
}

double potential(const DiscreteMeasure& m, double x) {
  double s = 0.0;
  for (const Atom& a : m.atoms()) s += std::abs(x - a.position) * a.mass;
  return s;
}

ConvexOrderResult convex_order_leq(const DiscreteMeasure& mu,
                                   const DiscreteMeasure& nu, double tol) {
  if (!mu.is_probability(tol) || !nu.is_probability(tol))
    throw std::invalid_argument("convex_order_leq: inputs must be probability measures");
  const double bmu = barycenter(mu);
  const double bnu = barycenter(nu);
  if (std::abs(bmu - bnu) > tol) {
    return {false, bnu, "mean mismatch"};
  }
  // Potentials of atomic measures are piecewise linear with kinks at the
  // atoms, so domination on the union of atom positions is exact.
  std::vector<double> grid;
  grid.reserve(mu.size() + nu.size());
  for (const Atom& a : mu.atoms()) grid.push_back(a.position);
  for (const Atom& a : nu.atoms()) grid.push_back(a.position);
  std::sort(grid.begin(), grid.end());
  for (double x : grid) {
    const double umu = potential(mu, x);
    const double unu = potential(nu, x);
    if (umu > unu + tol) {
      return {false, x, "potential domination fails"};
    }
  }
  return {true, std::nullopt, ""};
}

std::pair<DiscreteMeasure, DiscreteMeasure> marginals(const Coupling& q) {
  std::vector<Atom> xs, ys;
  xs.reserve(q.size());
  ys.reserve(q.size());
  for (const CouplingEntry& e : q.entries()) {
    xs.push_back({e.x, e.mass});
    ys.push_back({e.y, e.mass});
  }
  return {DiscreteMeasure(std::move(xs)), DiscreteMeasure(std::move(ys))};
}

MartingaleCheck is_martingale(const Coupling& q, double tol) {
  MartingaleCheck res;
  res.ok = true;
  const auto& es = q.entries();
  std::size_t i = 0;
  while (i < es.size()) {
    std::size_t j = i;
    double mass = 0.0, ymean = 0.0;
    while (j < es.size() && es[j].x - es[i].x <= kPositionTol) {
      mass += es[j].mass;
      ymean += es[j].y * es[j].mass;
      ++j;
    }
    const double x = es[i].x;
    const double dev = std::abs(ymean / mass - x);
    res.worst_violation = std::max(res.worst_violation, dev);
    if (dev > tol * (1.0 + std::abs(x)) && res.ok) {
      res.ok = false;
      res.witness_x = x;  // first violating x in atom order
    }
    i = j;
  }
  return res;
}

double wasserstein1(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (std::abs(mu.total_mass() - nu.total_mass()) > 1e-9)
    throw std::invalid_argument("wasserstein1: total mass mismatch");
  const auto& a = mu.atoms();
  const auto& b = nu.atoms();
  double dist = 0.0;
  double fdiff = 0.0;  // F_mu - F_nu left of the current point
  double prev = 0.0;
  bool first = true;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j >= b.size() || (i < a.size() && a[i].position <= b[j].position))
      x = a[i].position;
    else
      x = b[j].position;
    if (!first) dist += std::abs(fdiff) * (x - prev);
    while (i < a.size() && a[i].position <= x) fdiff += a[i++].mass;
    while (j < b.size() && b[j].position <= x) fdiff -= b[j++].mass;
    prev = x;
    first = false;
  }
  return dist;
}

SupportSet support(const Coupling& q, double threshold) {
  std::vector<std::pair<double, double>> pts;
  for (const CouplingEntry& e : q.entries())
    if (e.mass > threshold) pts.emplace_back(e.x, e.y);
  return SupportSet::of(std::move(pts));
}

Coupling thresholded(const Coupling& q, double threshold) {
  std::vector<CouplingEntry> kept;
  for (const CouplingEntry& e : q.entries())
    if (e.mass > threshold) kept.push_back(e);
  return Coupling(std::move(kept));
}

}  // namespace motforge
