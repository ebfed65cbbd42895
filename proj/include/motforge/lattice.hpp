#pragma once

#include <cstdint>
#include <vector>

#include "motforge/measure.hpp"

namespace motforge {

// Arithmetic grid delta * Z restricted to a window, with the walk convention
// time step = delta^2. Measures are snapped to the grid at construction.
class Lattice {
 public:
  Lattice(double delta, double y_lo, double y_hi, long long horizon,
          std::uint64_t seed);

  // Window covering both supports with `margin` extra grid steps on each
  // side. horizon == 0 picks a default that lets the dynamic programming
  // absorb everything a fitted barrier can absorb.
  static Lattice cover(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       double delta, int margin = 8, long long horizon = 0,
                       std::uint64_t seed = 1);

  double delta() const { return delta_; }
  long long horizon() const { return horizon_; }
  std::uint64_t seed() const { return seed_; }
  int size() const { return n_; }
  long long base() const { return base_; }  // absolute index of grid point 0

  double value(int i) const { return static_cast<double>(base_ + i) * delta_; }
  // Nearest grid index, rounding half away from zero; throws if outside.
  int index(double y) const;
  bool covers(double y) const;

  // Snaps atoms to the grid (merging collisions); reports the largest snap
  // distance, which feeds the W1 error budget of barrier fits.
  DiscreteMeasure snap(const DiscreteMeasure& m, double* max_snap = nullptr) const;

 private:
  double delta_;
  long long base_;
  int n_;
  long long horizon_;
  std::uint64_t seed_;
};

enum class BarrierKind { right, left, two_sided_inner, two_sided_outer };
enum class Phase { d_minus, d_plus };
enum class Openness { open, closed };

const char* to_string(BarrierKind k);
const char* to_string(Phase p);

// Phase-space stopping region. Thresholds live on an arithmetic y-grid and
// are expressed in d units, d being B_t - B_0 (or B_t + B_0 in d_plus
// phase); +/-inf mark levels without a constraint.
//   right:            stop when d >= psi(y)   (closed; open is strict)
//   left:             stop when d <= psi(y)
//   two_sided_inner:  stop when d not in (psi(y), psi2(y)), psi <= 0 <= psi2
//   two_sided_outer:  stop when d in (psi(y), psi2(y)) (open band)
struct Barrier {
  BarrierKind kind = BarrierKind::right;
  Phase phase = Phase::d_minus;
  double delta = 0.0;         // grid spacing
  std::vector<double> grid;   // sorted y values
  std::vector<double> psi;    // per grid level
  std::vector<double> psi2;   // two-sided only
  bool exclude_time_zero = true;

  void validate() const;
};

// One lazily generated random walk path: start index plus the substream that
// reproduces its increments.
struct WalkPath {
  int start = 0;  // lattice index
  std::uint64_t stream = 0;
};

class WalkEnsemble {
 public:
  WalkEnsemble(Lattice lattice, std::vector<WalkPath> paths, bool horizon_warning)
      : lattice_(lattice), paths_(std::move(paths)), horizon_warning_(horizon_warning) {}

  const Lattice& lattice() const { return lattice_; }
  const std::vector<WalkPath>& paths() const { return paths_; }
  bool horizon_warning() const { return horizon_warning_; }

 private:
  Lattice lattice_;
  std::vector<WalkPath> paths_;
  bool horizon_warning_;
};

// Stratified start draw: path counts proportional to atom masses with the
// remainder randomized; per-path increments come from (seed, path index).
WalkEnsemble simulate_walk(const DiscreteMeasure& mu, const Lattice& lattice,
                           int n_paths);

// Deterministic replay of the path's increments.
double walk_position(const WalkPath& path, const Lattice& lattice,
                     long long steps);

struct HitResult {
  long long steps = 0;
  double y_final = 0.0;
  bool stopped = false;
};

HitResult hit_time(const WalkPath& path, const Lattice& lattice,
                   const Barrier& barrier, Openness openness);

}  // namespace motforge
