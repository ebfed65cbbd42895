#include "motforge/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "motforge/rng.hpp"
#include "motforge/sep_internal.hpp"

namespace motforge {

Lattice::Lattice(double delta, double y_lo, double y_hi, long long horizon,
                 std::uint64_t seed)
    : delta_(delta), horizon_(horizon), seed_(seed) {
  if (delta <= 0.0) throw std::invalid_argument("lattice: delta must be positive");
  if (y_hi < y_lo) throw std::invalid_argument("lattice: empty window");
  base_ = std::llround(y_lo / delta);
  const long long top = std::llround(y_hi / delta);
  n_ = static_cast<int>(top - base_ + 1);
  if (n_ < 2) throw std::invalid_argument("lattice: window too small");
  if (n_ > 2'000'000) throw std::invalid_argument("lattice: window too large for delta");
  if (horizon_ <= 0)
    horizon_ = std::min<long long>(4'000'000, 16LL * n_ * n_ + 1000);
}

Lattice Lattice::cover(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       double delta, int margin, long long horizon,
                       std::uint64_t seed) {
  if (mu.empty() || nu.empty()) throw std::invalid_argument("lattice: empty measure");
  const double lo = std::min(mu.atoms().front().position, nu.atoms().front().position);
  const double hi = std::max(mu.atoms().back().position, nu.atoms().back().position);
  return Lattice(delta, lo - margin * delta, hi + margin * delta, horizon, seed);
}

int Lattice::index(double y) const {
  const long long abs_idx = std::llround(y / delta_);
  const long long rel = abs_idx - base_;
  if (rel < 0 || rel >= n_)
    throw std::out_of_range("lattice: value outside the grid window");
  return static_cast<int>(rel);
}

bool Lattice::covers(double y) const {
  const long long rel = std::llround(y / delta_) - base_;
  return rel >= 0 && rel < n_;
}

DiscreteMeasure Lattice::snap(const DiscreteMeasure& m, double* max_snap) const {
  std::vector<Atom> atoms;
  double worst = 0.0;
  atoms.reserve(m.size());
  for (const Atom& a : m.atoms()) {
    const int i = index(a.position);
    worst = std::max(worst, std::abs(value(i) - a.position));
    atoms.push_back({value(i), a.mass});
  }
  if (max_snap) *max_snap = worst;
  return DiscreteMeasure(std::move(atoms));
}

const char* to_string(BarrierKind k) {
  switch (k) {
    case BarrierKind::right: return "right";
    case BarrierKind::left: return "left";
    case BarrierKind::two_sided_inner: return "two_sided_inner";
    case BarrierKind::two_sided_outer: return "two_sided_outer";
  }
  return "?";
}

const char* to_string(Phase p) {
  return p == Phase::d_minus ? "d_minus" : "d_plus";
}

void Barrier::validate() const {
  if (delta <= 0.0) throw std::invalid_argument("barrier: delta must be positive");
  if (grid.size() != psi.size())
    throw std::invalid_argument("barrier: grid/psi size mismatch");
  const bool two_sided =
      kind == BarrierKind::two_sided_inner || kind == BarrierKind::two_sided_outer;
  if (two_sided && psi2.size() != grid.size())
    throw std::invalid_argument("barrier: two-sided needs psi2");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw std::invalid_argument("barrier: grid must be sorted");
  if (kind == BarrierKind::two_sided_inner) {
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (psi[i] > 0.0 || psi2[i] < 0.0)
        throw std::invalid_argument("barrier: inner band must satisfy psi <= 0 <= psi2");
  }
}

WalkEnsemble simulate_walk(const DiscreteMeasure& mu, const Lattice& lattice,
                           int n_paths) {
  if (n_paths < 1) throw std::invalid_argument("simulate_walk: need n_paths >= 1");
  const DiscreteMeasure snapped = lattice.snap(mu);
  const double total = snapped.total_mass();

  // Stratified allocation: floor shares first, remainder drawn from the
  // fractional parts.
  std::vector<int> counts(snapped.size(), 0);
  std::vector<double> frac(snapped.size(), 0.0);
  int assigned = 0;
  for (std::size_t i = 0; i < snapped.size(); ++i) {
    const double share = n_paths * snapped.mass(i) / total;
    counts[i] = static_cast<int>(share);
    frac[i] = share - counts[i];
    assigned += counts[i];
  }
  auto eng = make_engine(lattice.seed(), 0xa110c);
  for (int r = assigned; r < n_paths; ++r) {
    double fsum = 0.0;
    for (double f : frac) fsum += f;
    double u = uniform01(eng) * (fsum > 0 ? fsum : 1.0);
    std::size_t pick = snapped.size() - 1;
    for (std::size_t i = 0; i < frac.size(); ++i) {
      u -= fsum > 0 ? frac[i] : 1.0 / frac.size();
      if (u <= 0) { pick = i; break; }
    }
    counts[pick]++;
  }

  std::vector<WalkPath> paths;
  paths.reserve(n_paths);
  int path_id = 0;
  for (std::size_t i = 0; i < snapped.size(); ++i) {
    const int start = lattice.index(snapped.position(i));
    for (int k = 0; k < counts[i]; ++k)
      paths.push_back({start, splitmix64(lattice.seed() ^ splitmix64(path_id++))});
  }

  // Can the walk resolve the target spread within the horizon?
  const double span = snapped.atoms().back().position - snapped.atoms().front().position;
  const double reach = std::sqrt(static_cast<double>(lattice.horizon())) * lattice.delta();
  const bool warn = reach < span;
  return WalkEnsemble(lattice, std::move(paths), warn);
}

double walk_position(const WalkPath& path, const Lattice& lattice,
                     long long steps) {
  detail::BitStream bits(path.stream);
  long long pos = path.start;
  for (long long s = 0; s < steps; ++s) pos += bits.next() ? 1 : -1;
  return lattice.value(static_cast<int>(std::clamp<long long>(
      pos, 0, lattice.size() - 1)));
}

HitResult hit_time(const WalkPath& path, const Lattice& lattice,
                   const Barrier& barrier, Openness openness) {
  barrier.validate();
  const detail::BoundBarrier bound =
      detail::bind_barrier(barrier, lattice, openness);
  detail::BitStream bits(path.stream);

  long long pos = path.start;
  if (!barrier.exclude_time_zero && bound.stops(path.start, static_cast<int>(pos)))
    return {0, lattice.value(static_cast<int>(pos)), true};
  for (long long s = 1; s <= lattice.horizon(); ++s) {
    pos += bits.next() ? 1 : -1;
    if (pos < 0 || pos >= lattice.size()) {
      // Outside the window no thresholds are defined; the walk keeps going
      // but can never stop out there, so run it until it returns.
      continue;
    }
    if (bound.stops(path.start, static_cast<int>(pos)))
      return {s, lattice.value(static_cast<int>(pos)), true};
  }
  return {lattice.horizon(),
          lattice.value(static_cast<int>(std::clamp<long long>(pos, 0, lattice.size() - 1))),
          false};
}

}  // namespace motforge
