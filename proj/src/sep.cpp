#include "motforge/sep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <stdexcept>

#include "motforge/sep_internal.hpp"

namespace motforge {

namespace detail {

BoundBarrier bind_barrier(const Barrier& barrier, const Lattice& lattice,
                          Openness openness) {
  if (std::abs(barrier.delta - lattice.delta()) > 1e-12)
    throw std::invalid_argument("barrier and lattice grid spacing differ");
  const int n = lattice.size();
  BoundBarrier bb;
  bb.plus_phase = barrier.phase == Phase::d_plus;
  bb.two_base = 2 * lattice.base();
  bb.lo.assign(n, -kFar);
  bb.hi.assign(n, kFar);
  const bool open = openness == Openness::open;

  // Default: never stop. right/left/inner stop outside (lo, hi); outer stops
  // inside [lo, hi].
  if (barrier.kind == BarrierKind::two_sided_outer) {
    bb.inside_band = true;
    for (int i = 0; i < n; ++i) {
      bb.lo[i] = kFar;
      bb.hi[i] = -kFar;
    }
  }

  for (std::size_t g = 0; g < barrier.grid.size(); ++g) {
    if (!lattice.covers(barrier.grid[g])) continue;
    const int i = lattice.index(barrier.grid[g]);
    const double d = lattice.delta();
    switch (barrier.kind) {
      case BarrierKind::right:
        // stop when d >= psi (closed) / d > psi (open)
        bb.hi[i] = open ? floor_tol(barrier.psi[g] / d) + 1 : ceil_tol(barrier.psi[g] / d);
        break;
      case BarrierKind::left:
        bb.lo[i] = open ? ceil_tol(barrier.psi[g] / d) - 1 : floor_tol(barrier.psi[g] / d);
        break;
      case BarrierKind::two_sided_inner:
        // stop when d <= psi1 or d >= psi2 (closed complement of the open band)
        if (open) {
          bb.lo[i] = ceil_tol(barrier.psi[g] / d) - 1;
          bb.hi[i] = floor_tol(barrier.psi2[g] / d) + 1;
        } else {
          bb.lo[i] = floor_tol(barrier.psi[g] / d);
          bb.hi[i] = ceil_tol(barrier.psi2[g] / d);
        }
        break;
      case BarrierKind::two_sided_outer:
        // stop when psi1 < d < psi2 (open band) / psi1 <= d <= psi2 (closed)
        if (open) {
          bb.lo[i] = floor_tol(barrier.psi[g] / d) + 1;
          bb.hi[i] = ceil_tol(barrier.psi2[g] / d) - 1;
        } else {
          bb.lo[i] = ceil_tol(barrier.psi[g] / d);
          bb.hi[i] = floor_tol(barrier.psi2[g] / d);
        }
        break;
    }
  }
  return bb;
}

namespace {

// Nearest absorbing level at or below / above j for a fixed start.
template <class AbsorbAt>
int scan_down(const AbsorbAt& absorb_at, int n, int j) {
  for (int l = std::min(j, n - 1); l >= 0; --l)
    if (absorb_at(l)) return l;
  return -1;
}

template <class AbsorbAt>
int scan_up(const AbsorbAt& absorb_at, int n, int j) {
  for (int l = std::max(j, 0); l < n; ++l)
    if (absorb_at(l)) return l;
  return n;
}

template <class AbsorbAt>
void plain_ruin(const AbsorbAt& absorb_at, int n, int j, double weight,
                RuinLaw& out) {
  if (j >= 0 && j < n && absorb_at(j)) {
    out.add(j, weight);
    return;
  }
  const int a = scan_down(absorb_at, n, j - 1);
  const int b = scan_up(absorb_at, n, j + 1);
  const bool has_a = a >= 0 && a < j;
  const bool has_b = b < n && b > j;
  if (has_a && has_b) {
    const double inv = 1.0 / (b - a);
    out.add(a, weight * (b - j) * inv);
    out.add(b, weight * (j - a) * inv);
  } else if (has_a) {
    out.add(a, weight);  // one-sided: the recurrent walk reaches it a.s.
  } else if (has_b) {
    out.add(b, weight);
  } else {
    out.unabsorbed += weight;
  }
}

}  // namespace

RuinLaw ruin_law(const std::vector<char>& absorbing, int start,
                 bool exclude_time_zero) {
  const int n = static_cast<int>(absorbing.size());
  auto at = [&](int l) { return absorbing[l] != 0; };
  RuinLaw law;
  if (start >= 0 && start < n && at(start)) {
    if (!exclude_time_zero) {
      law.add(start, 1.0);
    } else {
      // One forced step, then the start level absorbs returns.
      plain_ruin(at, n, start - 1, 0.5, law);
      plain_ruin(at, n, start + 1, 0.5, law);
    }
  } else {
    plain_ruin(at, n, start, 1.0, law);
  }
  return law;
}

}  // namespace detail

namespace {

struct AtomDp {
  std::vector<double> absorbed;
  double truncated = 0.0;
};

// Absorption DP for one start atom: the (d, y) chain collapses to the y line
// because the walk moves diagonally in phase space.
AtomDp run_dp(const std::vector<char>& absorbing, int n, int start,
              bool exclude_time_zero, long long horizon) {
  AtomDp out;
  out.absorbed.assign(n, 0.0);
  if (absorbing[start] && !exclude_time_zero) {
    out.absorbed[start] = 1.0;
    return out;
  }
  std::vector<double> cur(n, 0.0), nxt(n, 0.0);
  cur[start] = 1.0;
  double remaining = 1.0;
  double escaped = 0.0;
  int lo = start, hi = start;
  for (long long step = 1; step <= horizon && remaining > 1e-15; ++step) {
    const int nlo = std::max(0, lo - 1), nhi = std::min(n - 1, hi + 1);
    std::fill(nxt.begin() + nlo, nxt.begin() + nhi + 1, 0.0);
    for (int i = lo; i <= hi; ++i) {
      const double m = cur[i];
      if (m == 0.0) continue;
      const double half = 0.5 * m;
      if (i == 0)
        escaped += half;
      else if (absorbing[i - 1])
        out.absorbed[i - 1] += half;
      else
        nxt[i - 1] += half;
      if (i == n - 1)
        escaped += half;
      else if (absorbing[i + 1])
        out.absorbed[i + 1] += half;
      else
        nxt[i + 1] += half;
    }
    cur.swap(nxt);
    lo = nlo;
    hi = nhi;
    remaining = 0.0;
    for (int i = lo; i <= hi; ++i) remaining += cur[i];
  }
  out.truncated = remaining + escaped;
  return out;
}

// Converts a bound barrier into per-start absorbing masks.
std::vector<char> absorbing_mask(const detail::BoundBarrier& bb, int n, int start) {
  std::vector<char> mask(n, 0);
  for (int i = 0; i < n; ++i) mask[i] = bb.stops(start, i) ? 1 : 0;
  return mask;
}

}  // namespace

namespace {

// Each barrier family is read at its defining strictness: right/left/inner
// regions contain their boundary, the outer band is open.
Openness canonical_openness(const Barrier& b) {
  return b.kind == BarrierKind::two_sided_outer ? Openness::open
                                                : Openness::closed;
}

}  // namespace

EmbedResult embedded_law(const Barrier& barrier, const DiscreteMeasure& mu,
                         const Lattice& lattice) {
  barrier.validate();
  const DiscreteMeasure snapped = lattice.snap(mu);
  const detail::BoundBarrier bb =
      detail::bind_barrier(barrier, lattice, canonical_openness(barrier));
  const int n = lattice.size();
  std::vector<double> mass(n, 0.0);
  double truncated = 0.0;
  for (const Atom& a : snapped.atoms()) {
    const int ix = lattice.index(a.position);
    const AtomDp dp = run_dp(absorbing_mask(bb, n, ix), n, ix,
                             barrier.exclude_time_zero, lattice.horizon());
    for (int i = 0; i < n; ++i) mass[i] += a.mass * dp.absorbed[i];
    truncated += a.mass * dp.truncated;
  }
  std::vector<Atom> atoms;
  for (int i = 0; i < n; ++i)
    if (mass[i] > 0.0) atoms.push_back({lattice.value(i), mass[i]});
  return {DiscreteMeasure(std::move(atoms)), truncated};
}

InducedCouplingResult induced_coupling(const Barrier& barrier,
                                       const DiscreteMeasure& mu,
                                       const Lattice& lattice) {
  barrier.validate();
  const DiscreteMeasure snapped = lattice.snap(mu);
  const detail::BoundBarrier bb =
      detail::bind_barrier(barrier, lattice, canonical_openness(barrier));
  const int n = lattice.size();
  std::vector<CouplingEntry> entries;
  double truncated = 0.0;
  for (const Atom& a : snapped.atoms()) {
    const int ix = lattice.index(a.position);
    const AtomDp dp = run_dp(absorbing_mask(bb, n, ix), n, ix,
                             barrier.exclude_time_zero, lattice.horizon());
    for (int i = 0; i < n; ++i)
      if (dp.absorbed[i] > 0.0)
        entries.push_back({a.position, lattice.value(i), a.mass * dp.absorbed[i]});
    truncated += a.mass * dp.truncated;
  }
  return {Coupling(std::move(entries)), truncated};
}

// ---------------------------------------------------------------------------
// Barrier fitting.

namespace {

constexpr long long kNoneLow = -detail::kFar;   // cutoff that absorbs nobody
constexpr long long kNoneHigh = detail::kFar;

struct FitGrid {
  const Lattice* lat = nullptr;
  std::vector<int> atom_ix;      // start indices (snapped mu)
  std::vector<double> atom_w;    // normalized masses
  std::vector<int> levels;       // nu levels (lattice indices), ascending
  std::vector<double> level_mass;  // nu mass per level
  bool exclude_time_zero = true;

  int kmin = 0, kmax = 0;  // atom index range

  // Absorption cutoffs; interpretation depends on the barrier family.
  //   right:  absorb iff ix <= cut[iy]
  //   inner:  absorb iff ix <= cut[iy] or ix >= cut2[iy]
  //   outer:  absorb iff cut[iy] < ix < cut2[iy]
  std::vector<long long> cut, cut2;
  bool outer = false;

  bool absorb(int ix, int iy) const {
    if (outer) return ix > cut[iy] && ix < cut2[iy];
    return ix <= cut[iy] || ix >= cut2[iy];
  }

  // Embedded mass per level under the current cutoffs (exact ruin limit).
  std::vector<double> law() const {
    const int n = lat->size();
    std::vector<double> mass(n, 0.0);
    std::vector<char> mask(n, 0);
    for (std::size_t t = 0; t < atom_ix.size(); ++t) {
      const int ix = atom_ix[t];
      for (int i = 0; i < n; ++i) mask[i] = absorb(ix, i) ? 1 : 0;
      const detail::RuinLaw rl = detail::ruin_law(mask, ix, exclude_time_zero);
      for (int k = 0; k < 4 && rl.levels[k] >= 0; ++k)
        mass[rl.levels[k]] += atom_w[t] * rl.probs[k];
    }
    return mass;
  }

  double cdf_at(int level) const {
    const std::vector<double> mass = law();
    double s = 0.0;
    for (int i = 0; i <= level; ++i) s += mass[i];
    return s;
  }

  double survival_at(int level) const {
    const std::vector<double> mass = law();
    double s = 0.0;
    for (int i = level; i < lat->size(); ++i) s += mass[i];
    return s;
  }

  // W1 between the current embedded law and the target levels; unabsorbed
  // mass counts against the fit via a pad at the target mean.
  double misfit() const {
    const std::vector<double> mass = law();
    std::vector<Atom> got, want;
    for (int i = 0; i < lat->size(); ++i)
      if (mass[i] > 0) got.push_back({lat->value(i), mass[i]});
    double mean = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      want.push_back({lat->value(levels[i]), level_mass[i]});
      mean += lat->value(levels[i]) * level_mass[i];
    }
    DiscreteMeasure a(std::move(got)), b(std::move(want));
    const double miss = b.total_mass() - a.total_mass();
    if (miss > 1e-15) {
      std::vector<Atom> fixed(a.atoms());
      fixed.push_back({mean, miss});
      a = DiscreteMeasure(std::move(fixed));
    } else if (miss < -1e-15) {  // rounding excess on the law side
      std::vector<Atom> fixed(b.atoms());
      fixed.push_back({mean, -miss});
      b = DiscreteMeasure(std::move(fixed));
    }
    return wasserstein1(a, b);
  }
};

// Monotone integer bisection: smallest v in [lo, hi] with eval(v) >= target,
// then the neighbour with the smaller absolute error wins.
template <class Eval>
long long fit_cutoff(long long lo, long long hi, double target, const Eval& eval) {
  if (hi <= lo) return lo;
  if (eval(hi) < target - 1e-12) return hi;
  long long a = lo, b = hi;
  while (a < b) {
    const long long mid = a + (b - a) / 2;
    if (eval(mid) >= target - 1e-12)
      b = mid;
    else
      a = mid + 1;
  }
  if (a > lo) {
    const double err_a = std::abs(eval(a) - target);
    const double err_prev = std::abs(eval(a - 1) - target);
    if (err_prev < err_a - 1e-15) return a - 1;
  }
  return a;
}

// Applies cutoff proposals during the sweeps. The burn-in phase accepts every
// bisection proposal so absorption cascades outward from nothing; afterwards
// a proposal is kept only when the global misfit strictly improves, which
// turns the sweeps into a monotone descent that cannot cycle.
class FitGate {
 public:
  explicit FitGate(FitGrid& g) : g_(g), current_(g.misfit()) {}

  void start_gating() {
    gating_ = true;
    current_ = g_.misfit();
  }

  bool try_value(std::vector<long long>& slots, int level, long long value) {
    if (slots[level] == value) return false;
    const long long old = slots[level];
    slots[level] = value;
    if (!gating_) return true;
    const double after = g_.misfit();
    if (after < current_ - 1e-15) {
      current_ = after;
      return true;
    }
    slots[level] = old;
    return false;
  }

 private:
  FitGrid& g_;
  double current_;
  bool gating_ = false;
};

FitGrid make_grid(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                  const Lattice& lattice, double* max_snap) {
  double snap_mu = 0.0, snap_nu = 0.0;
  const DiscreteMeasure mu_s = lattice.snap(mu, &snap_mu);
  const DiscreteMeasure nu_s = lattice.snap(nu, &snap_nu);
  *max_snap = std::max(snap_mu, snap_nu);

  FitGrid g;
  g.lat = &lattice;
  const double total = mu_s.total_mass();
  for (const Atom& a : mu_s.atoms()) {
    g.atom_ix.push_back(lattice.index(a.position));
    g.atom_w.push_back(a.mass / total);
  }
  const double nu_total = nu_s.total_mass();
  for (const Atom& a : nu_s.atoms()) {
    g.levels.push_back(lattice.index(a.position));
    g.level_mass.push_back(a.mass / nu_total);
  }
  g.kmin = g.atom_ix.front();
  g.kmax = g.atom_ix.back();
  g.cut.assign(lattice.size(), kNoneLow);
  g.cut2.assign(lattice.size(), kNoneHigh);
  return g;
}

// Levels carrying both mu and nu mass (candidates for staying put).
std::vector<int> common_levels(const FitGrid& g) {
  std::vector<int> out;
  for (int L : g.levels)
    if (std::binary_search(g.atom_ix.begin(), g.atom_ix.end(), L)) out.push_back(L);
  return out;
}

// One threshold knob at one level: an axis on which larger values absorb
// more, mapped into the slot array. During burn-in the primary cumulative
// bisection is applied as proposed; under the gate both cumulative
// bisections and single-step creeps are offered and kept only when the
// global misfit strictly drops.
template <class ToSlot, class FromSlot>
bool process_knob(FitGrid& g, FitGate& gate, bool gating,
                  std::vector<long long>& slots, int L, long long lo,
                  long long hi, double tgt_cdf, double tgt_surv,
                  bool primary_surv, const ToSlot& to_slot,
                  const FromSlot& from_slot) {
  if (hi <= lo) return false;
  auto bisect = [&](bool surv) {
    const long long old = slots[L];
    return fit_cutoff(lo, hi, surv ? tgt_surv : tgt_cdf, [&](long long v) {
      slots[L] = to_slot(v);
      const double c = surv ? g.survival_at(L) : g.cdf_at(L);
      slots[L] = old;
      return c;
    });
  };
  bool moved = gate.try_value(slots, L, to_slot(bisect(primary_surv)));
  if (gating) {
    moved = gate.try_value(slots, L, to_slot(bisect(!primary_surv))) || moved;
    const long long cur = std::clamp(from_slot(slots[L]), lo, hi);
    if (cur + 1 <= hi) moved = gate.try_value(slots, L, to_slot(cur + 1)) || moved;
    if (cur - 1 >= lo) moved = gate.try_value(slots, L, to_slot(cur - 1)) || moved;
  }
  return moved;
}

// Levels ordered outward from the nu mean; outer levels respond monotonically
// to their cutoffs, which helps the sweeps settle.
std::vector<std::size_t> sweep_order(const FitGrid& g) {
  double mean = 0.0;
  for (std::size_t i = 0; i < g.levels.size(); ++i)
    mean += g.lat->value(g.levels[i]) * g.level_mass[i];
  std::vector<std::size_t> order(g.levels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double da = std::abs(g.lat->value(g.levels[a]) - mean);
    const double db = std::abs(g.lat->value(g.levels[b]) - mean);
    if (da != db) return da < db;
    return g.levels[a] < g.levels[b];
  });
  return order;
}

FitResult finish_fit(FitGrid& g, const Lattice& lattice, BarrierKind kind,
                     int sweeps, bool converged, double max_snap,
                     const FitOptions& options) {
  const double residual = g.misfit();
  if (!converged)
    throw std::runtime_error("barrier fit did not converge within " +
                             std::to_string(options.max_sweeps) +
                             " sweeps; W1 residual " + std::to_string(residual));
  if (residual > options.w1_slack * lattice.delta())
    throw std::runtime_error("barrier fit residual " + std::to_string(residual) +
                             " exceeds " + std::to_string(options.w1_slack) +
                             " * delta");

  Barrier barrier;
  barrier.kind = kind;
  barrier.phase = Phase::d_minus;
  barrier.delta = lattice.delta();
  barrier.exclude_time_zero = true;
  const int n = lattice.size();
  barrier.grid.resize(n);
  const double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) barrier.grid[i] = lattice.value(i);
  if (kind == BarrierKind::right) {
    barrier.psi.assign(n, inf);
    for (int i = 0; i < n; ++i)
      if (g.cut[i] > kNoneLow)
        barrier.psi[i] = (i - g.cut[i]) * lattice.delta();
  } else if (kind == BarrierKind::two_sided_inner) {
    barrier.psi.assign(n, -inf);
    barrier.psi2.assign(n, inf);
    for (int i = 0; i < n; ++i) {
      if (g.cut2[i] < kNoneHigh) barrier.psi[i] = (i - g.cut2[i]) * lattice.delta();
      if (g.cut[i] > kNoneLow) barrier.psi2[i] = (i - g.cut[i]) * lattice.delta();
    }
  } else {  // outer
    barrier.psi.assign(n, 0.0);
    barrier.psi2.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
      barrier.psi[i] = g.cut2[i] < kNoneHigh ? (i - g.cut2[i]) * lattice.delta() : -inf;
      barrier.psi2[i] = g.cut[i] > kNoneLow ? (i - g.cut[i]) * lattice.delta() : inf;
    }
  }
  FitResult res;
  res.barrier = std::move(barrier);
  res.sweeps = sweeps;
  res.w1_residual = residual;
  res.max_snap = max_snap;
  return res;
}

}  // namespace

FitResult fit_right_barrier(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const Lattice& lattice, FitOptions options) {
  const ConvexOrderResult order = convex_order_leq(mu, nu);
  if (!order.ordered)
    throw std::invalid_argument("fit_right_barrier: marginals not in convex order (" +
                                order.reason + ")");
  double max_snap = 0.0;
  FitGrid g = make_grid(mu, nu, lattice, &max_snap);
  const std::vector<std::size_t> order_idx = sweep_order(g);

  // Mass shared by both marginals starts on the diagonal; the degenerate
  // mu = nu instance then begins (and stays) at the identity embedding.
  for (int L : common_levels(g)) g.cut[L] = L;

  std::vector<double> target_cdf(g.levels.size()), target_surv(g.levels.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < g.levels.size(); ++i)
    target_cdf[i] = (acc += g.level_mass[i]);
  double tail = 0.0;
  for (std::size_t i = g.levels.size(); i-- > 0;)
    target_surv[i] = (tail += g.level_mass[i]);
  double nu_mean = 0.0;
  for (std::size_t i = 0; i < g.levels.size(); ++i)
    nu_mean += g.lat->value(g.levels[i]) * g.level_mass[i];

  int sweeps = 0;
  bool converged = false;
  FitGate gate(g);
  const int burn_in = std::min(40, options.max_sweeps / 2);
  const long long lo = static_cast<long long>(g.kmin) - 1;
  auto to_slot = [&](long long v) { return v <= g.kmin - 1 ? kNoneLow : v; };
  auto from_slot_of = [&](long long cut) { return cut == kNoneLow ? lo : cut; };
  bool gating = false;
  for (int s = 1; s <= options.max_sweeps; ++s) {
    if (!gating && s > burn_in) {
      gating = true;
      gate.start_gating();
    }
    bool changed = false;
    for (std::size_t oi : order_idx) {
      const int L = g.levels[oi];
      changed = process_knob(
                    g, gate, gating, g.cut, L, lo, g.kmax, target_cdf[oi],
                    target_surv[oi], g.lat->value(L) >= nu_mean, to_slot,
                    [&](long long cut) { return from_slot_of(cut); }) ||
                changed;
    }
    sweeps = s;
    if (!changed) {
      if (gating) {
        converged = true;
        break;
      }
      gating = true;  // burn-in settled early; confirm under the gate
      gate.start_gating();
    }
  }
  return finish_fit(g, lattice, BarrierKind::right, sweeps, converged, max_snap,
                    options);
}

FitResult fit_two_sided(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        const Lattice& lattice, TwoSidedKind kind,
                        FitOptions options) {
  const ConvexOrderResult order = convex_order_leq(mu, nu);
  if (!order.ordered)
    throw std::invalid_argument("fit_two_sided: marginals not in convex order (" +
                                order.reason + ")");
  double max_snap = 0.0;
  FitGrid g = make_grid(mu, nu, lattice, &max_snap);

  const bool outer = kind == TwoSidedKind::outer;
  bool dispersion_ok = true;
  if (outer) {
    // Disjoint supports are a hard precondition; the stronger interval
    // dispersion pattern mu(I) = nu(I^c) = 1 is only reported.
    for (int L : g.levels)
      if (std::binary_search(g.atom_ix.begin(), g.atom_ix.end(), L))
        throw std::invalid_argument("fit_two_sided(outer): supports must be disjoint");
    for (int L : g.levels)
      dispersion_ok = dispersion_ok && (L < g.kmin || L > g.kmax);
    g.outer = true;
    // Empty band everywhere by default.
    for (int i = 0; i < lattice.size(); ++i) {
      g.cut[i] = i;
      g.cut2[i] = i;
    }
  }

  const std::vector<std::size_t> order_idx = sweep_order(g);
  std::vector<double> target_cdf(g.levels.size()), target_surv(g.levels.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < g.levels.size(); ++i)
    target_cdf[i] = (acc += g.level_mass[i]);
  double tail = 0.0;
  for (std::size_t i = g.levels.size(); i-- > 0;)
    target_surv[i] = (tail += g.level_mass[i]);
  double mu_mean = 0.0;
  for (std::size_t t = 0; t < g.atom_ix.size(); ++t)
    mu_mean += g.lat->value(g.atom_ix[t]) * g.atom_w[t];

  int sweeps = 0;
  bool converged = false;
  FitGate gate(g);
  const int burn_in = std::min(40, options.max_sweeps / 2);
  bool gating = false;
  for (int s = 1; s <= options.max_sweeps; ++s) {
    if (!gating && s > burn_in) {
      gating = true;
      gate.start_gating();
    }
    bool changed = false;
    for (std::size_t oi : order_idx) {
      const int L = g.levels[oi];
      if (!outer) {
        // Inner barrier, two knobs per level: the up-absorption cutoff moves
        // the survival function, the down-absorption cutoff moves the CDF.
        {
          const long long lo = static_cast<long long>(g.kmin) - 1;
          const long long hi = std::max(lo, std::min<long long>(L, g.kmax));
          changed =
              process_knob(
                  g, gate, gating, g.cut, L, lo, hi, target_cdf[oi],
                  target_surv[oi], true,
                  [&](long long v) { return v <= g.kmin - 1 ? kNoneLow : v; },
                  [&](long long cut) { return cut == kNoneLow ? lo : cut; }) ||
              changed;
        }
        {
          // flipped axis: larger m means a lower down-cutoff, absorbing more
          const long long mlo = 0;
          const long long mhi = g.kmax + 1 - std::max<long long>(L, g.kmin);
          changed =
              process_knob(
                  g, gate, gating, g.cut2, L, mlo, mhi, target_cdf[oi],
                  target_surv[oi], false,
                  [&](long long m) {
                    const long long cd = g.kmax + 1 - m;
                    return cd > g.kmax ? kNoneHigh : cd;
                  },
                  [&](long long cd) {
                    return cd == kNoneHigh ? 0 : g.kmax + 1 - cd;
                  }) ||
              changed;
        }
      } else {
        // Outer barrier: one active window edge per level, by side; the
        // passive edge stays unconstrained.
        if (g.lat->value(L) >= mu_mean) {
          changed = gate.try_value(g.cut2, L, kNoneHigh) || changed;
          changed = process_knob(
                        g, gate, gating, g.cut, L, 0, L - (g.kmin - 1),
                        target_cdf[oi], target_surv[oi], true,
                        [&](long long v) { return L - v; },
                        [&](long long cut) { return L - cut; }) ||
                    changed;
        } else {
          changed = gate.try_value(g.cut, L, kNoneLow) || changed;
          changed = process_knob(
                        g, gate, gating, g.cut2, L, 0, (g.kmax + 1) - L,
                        target_cdf[oi], target_surv[oi], false,
                        [&](long long v) { return L + v; },
                        [&](long long cut2) { return cut2 - L; }) ||
                    changed;
        }
      }
    }
    sweeps = s;
    if (!changed) {
      if (gating) {
        converged = true;
        break;
      }
      gating = true;
      gate.start_gating();
    }
  }
  FitResult res = finish_fit(
      g, lattice,
      outer ? BarrierKind::two_sided_outer : BarrierKind::two_sided_inner,
      sweeps, converged, max_snap, options);
  res.dispersion_ok = dispersion_ok;
  return res;
}

// ---------------------------------------------------------------------------
// Monte Carlo comparisons.

OpenClosedResult compare_open_closed(const Barrier& barrier,
                                     const DiscreteMeasure& mu,
                                     const Lattice& lattice, int n_paths,
                                     double epsilon) {
  barrier.validate();
  const detail::BoundBarrier closed =
      detail::bind_barrier(barrier, lattice, Openness::closed);
  const detail::BoundBarrier open =
      detail::bind_barrier(barrier, lattice, Openness::open);
  const WalkEnsemble ensemble = simulate_walk(mu, lattice, n_paths);

  long long differ = 0;
  for (const WalkPath& p : ensemble.paths()) {
    detail::BitStream bits(p.stream);
    long long pos = p.start;
    bool have_cl = false, have_op = false;
    double y_cl = 0.0, y_op = 0.0;
    if (!barrier.exclude_time_zero) {
      if (closed.stops(p.start, p.start)) {
        have_cl = true;
        y_cl = lattice.value(p.start);
      }
      if (open.stops(p.start, p.start)) {
        have_op = true;
        y_op = lattice.value(p.start);
      }
    }
    for (long long s = 1; s <= lattice.horizon() && !(have_cl && have_op); ++s) {
      pos += bits.next() ? 1 : -1;
      if (pos < 0 || pos >= lattice.size()) continue;
      const int ip = static_cast<int>(pos);
      if (!have_cl && closed.stops(p.start, ip)) {
        have_cl = true;
        y_cl = lattice.value(ip);
      }
      if (!have_op && open.stops(p.start, ip)) {
        have_op = true;
        y_op = lattice.value(ip);
      }
    }
    const double fallback =
        lattice.value(static_cast<int>(std::clamp<long long>(pos, 0, lattice.size() - 1)));
    if (!have_cl) y_cl = fallback;
    if (!have_op) y_op = fallback;
    if (std::abs(y_op - y_cl) > epsilon) ++differ;
  }
  OpenClosedResult res;
  res.paths = n_paths;
  res.fraction = static_cast<double>(differ) / n_paths;
  res.standard_error =
      std::sqrt(std::max(0.0, res.fraction * (1.0 - res.fraction) / n_paths));
  return res;
}

// ---------------------------------------------------------------------------
// Stop-go pairs.

PathFunctional PathFunctional::terminal(const CostFunction& c) {
  PathFunctional f;
  CostFunction copy = c;
  f.eval_ = [copy](double start, double end) { return copy(start, end); };
  f.quadratic_ = c.family() == CostFamily::sm_neg;
  return f;
}

PathFunctional PathFunctional::abs_diff_neg() {
  PathFunctional f;
  f.eval_ = [](double start, double end) { return -std::abs(end - start); };
  return f;
}

PathFunctional PathFunctional::abs_cubed() {
  PathFunctional f;
  f.eval_ = [](double start, double end) {
    const double d = std::abs(end - start);
    return d * d * d;
  };
  return f;
}

const char* to_string(StopGoVerdict v) {
  switch (v) {
    case StopGoVerdict::SG: return "SG";
    case StopGoVerdict::SG2: return "SG2";
    case StopGoVerdict::neither: return "neither";
  }
  return "?";
}

StopGoReport check_stop_go(const StoppedPath& f, const StoppedPath& g,
                           const PathFunctional& gamma,
                           const std::optional<PathFunctional>& gamma2,
                           const SigmaSpec& sigma, const Lattice& lattice,
                           int n_samples) {
  if (std::abs(f.end - g.end) > 1e-12)
    throw std::invalid_argument("check_stop_go: paths must share the endpoint");
  if (n_samples < 2) throw std::invalid_argument("check_stop_go: need samples");
  const double delta = lattice.delta();
  const double e = f.end;

  long long radius_steps = 0;
  if (sigma.kind == SigmaSpec::Kind::exit_radius) {
    radius_steps = std::llround(sigma.value / delta);
    if (radius_steps < 1)
      throw std::invalid_argument("check_stop_go: radius below grid step");
  }

  // Common random increments: the same continuation displacement feeds both
  // sides of the inequality. Samples come in antithetic pairs (Delta, -Delta),
  // which cancels the odd-in-Delta noise and sharpens the gap estimate.
  if (n_samples % 2) ++n_samples;
  std::vector<double> displacement(n_samples);
  for (int i = 0; i < n_samples; i += 2) {
    detail::BitStream bits(splitmix64(lattice.seed() ^ splitmix64(0x570960 + i)));
    long long cum = 0;
    if (sigma.kind == SigmaSpec::Kind::fixed_steps) {
      const long long steps = static_cast<long long>(sigma.value);
      for (long long s = 0; s < steps; ++s) cum += bits.next() ? 1 : -1;
    } else {
      while (std::llabs(cum) < radius_steps) cum += bits.next() ? 1 : -1;
    }
    displacement[i] = cum * delta;
    displacement[i + 1] = -cum * delta;
  }

  // E[sigma] in time units; exact for both constructions.
  const double exact_sigma_time =
      sigma.kind == SigmaSpec::Kind::fixed_steps
          ? sigma.value * delta * delta
          : static_cast<double>(radius_steps) * radius_steps * delta * delta;

  // Statistics over the antithetic pair means, which are independent.
  auto estimate = [&](const PathFunctional& gam, double* mean, double* se) {
    const int pairs = n_samples / 2;
    double sum = 0.0, sumsq = 0.0;
    for (int k = 0; k < pairs; ++k) {
      double p = 0.0;
      for (int j = 0; j < 2; ++j) {
        const double d = displacement[2 * k + j];
        p += (gam(f.start, e + d) - gam(f.start, e)) -
             (gam(g.start, e + d) - gam(g.start, e));
      }
      p *= 0.5;
      sum += p;
      sumsq += p * p;
    }
    *mean = sum / pairs;
    const double var = std::max(0.0, (sumsq - sum * sum / pairs) / (pairs - 1));
    *se = std::sqrt(var / pairs);
  };

  StopGoReport rep;
  rep.samples = n_samples;
  rep.mean_sigma_time = exact_sigma_time;
  estimate(gamma, &rep.gap, &rep.standard_error);
  if (gamma.quadratic_terminal())
    rep.exact_gap = (g.start - f.start) * exact_sigma_time;

  if (rep.gap > 3.0 * rep.standard_error && rep.gap > 0.0) {
    rep.verdict = StopGoVerdict::SG;
  } else if (gamma2 && std::abs(rep.gap) <= 3.0 * rep.standard_error) {
    estimate(*gamma2, &rep.gap2, &rep.standard_error2);
    if (rep.gap2 > 3.0 * rep.standard_error2 && rep.gap2 > 0.0)
      rep.verdict = StopGoVerdict::SG2;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Barrier transformation.

Barrier transform_barrier(const TransformSpec& spec, const Barrier& barrier) {
  barrier.validate();
  if (barrier.phase != Phase::d_minus)
    throw std::invalid_argument("transform_barrier: barrier must be in d_minus phase");

  if (spec.kind() == TransformSpec::Kind::affine) {
    if (spec.a() <= 0.0)
      throw std::invalid_argument("transform_barrier: affine needs a > 0");
    Barrier out = barrier;
    out.delta = spec.a() * barrier.delta;
    for (std::size_t i = 0; i < out.grid.size(); ++i) {
      out.grid[i] = spec.a() * barrier.grid[i] + spec.b();
      out.psi[i] = spec.a() * barrier.psi[i];
      if (!out.psi2.empty()) out.psi2[i] = spec.a() * barrier.psi2[i];
    }
    return out;
  }

  if (spec.kind() == TransformSpec::Kind::mirror) {
    if (barrier.kind != BarrierKind::right && barrier.kind != BarrierKind::left)
      throw std::invalid_argument(
          "transform_barrier: mirror supports right/left barriers");
    const BarrierKind flipped = barrier.kind == BarrierKind::right
                                    ? BarrierKind::left
                                    : BarrierKind::right;
    if (spec.flips_x() && !spec.flips_y()) {
      // B_t + B_0 >= psi(B_t) rewrites to B_t - B_0 <= 2 B_t - psi(B_t): the
      // same region read in the d_plus phase equals a swapped-kind barrier
      // with psi'(y) = 2y - psi(y) in d_minus.
      Barrier out = barrier;
      out.kind = flipped;
      for (std::size_t i = 0; i < out.grid.size(); ++i)
        out.psi[i] = 2.0 * barrier.grid[i] - barrier.psi[i];
      return out;
    }
    if (spec.flips_x() && spec.flips_y()) {
      // Point reflection: the reflected walk traverses an isomorphic chain,
      // so this is the mirror that reproduces couplings atom for atom.
      Barrier out = barrier;
      out.kind = flipped;
      const std::size_t n = barrier.grid.size();
      for (std::size_t i = 0; i < n; ++i) {
        out.grid[i] = -barrier.grid[n - 1 - i];
        out.psi[i] = -barrier.psi[n - 1 - i];
      }
      return out;
    }
  }
  throw std::invalid_argument("transform_barrier: unsupported transform");
}

}  // namespace motforge
