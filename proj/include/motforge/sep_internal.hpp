#pragma once

// Internal lattice machinery shared by the walk simulator, the absorption
// dynamic programming and the barrier fitters.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "motforge/lattice.hpp"
#include "motforge/rng.hpp"

namespace motforge::detail {

// One random bit per walk step, drawn from a dedicated substream.
class BitStream {
 public:
  explicit BitStream(std::uint64_t stream) : eng_(stream) {}
  bool next() {
    if (left_ == 0) {
      word_ = eng_();
      left_ = 64;
    }
    const bool b = word_ & 1;
    word_ >>= 1;
    --left_;
    return b;
  }

 private:
  std::mt19937_64 eng_;
  std::uint64_t word_ = 0;
  int left_ = 0;
};

inline constexpr long long kFar = 1LL << 40;  // +/- infinity in grid steps

inline long long ceil_tol(double z) {
  if (z > 1e15) return kFar;
  if (z < -1e15) return -kFar;
  return static_cast<long long>(std::ceil(z - 1e-9));
}

inline long long floor_tol(double z) {
  if (z > 1e15) return kFar;
  if (z < -1e15) return -kFar;
  return static_cast<long long>(std::floor(z + 1e-9));
}

// Barrier bound to a lattice: integer thresholds per level, with the phase
// and openness folded in. Stopping is a pure integer test, so rounding never
// enters the region check.
struct BoundBarrier {
  bool inside_band = false;  // outer barriers stop inside the band
  std::vector<long long> lo, hi;
  long long two_base = 0;  // 2 * lattice base, for the d_plus phase
  bool plus_phase = false;

  // start/level are lattice indices.
  bool stops(int start, int level) const {
    const long long d =
        plus_phase ? two_base + static_cast<long long>(level) + start
                   : static_cast<long long>(level) - start;
    if (inside_band) return d >= lo[level] && d <= hi[level];
    return d <= lo[level] || d >= hi[level];
  }
};

BoundBarrier bind_barrier(const Barrier& barrier, const Lattice& lattice,
                          Openness openness);

// Exact infinite-horizon absorption law of the nearest-neighbour walk from
// `start` against per-level absorbing flags: the gambler's-ruin limit of the
// dynamic programming. At most four levels receive mass.
struct RuinLaw {
  int levels[4] = {-1, -1, -1, -1};
  double probs[4] = {0, 0, 0, 0};
  double unabsorbed = 0.0;

  void add(int level, double p) {
    for (int k = 0; k < 4; ++k) {
      if (levels[k] == level) {
        probs[k] += p;
        return;
      }
      if (levels[k] < 0) {
        levels[k] = level;
        probs[k] = p;
        return;
      }
    }
  }
};

RuinLaw ruin_law(const std::vector<char>& absorbing, int start,
                 bool exclude_time_zero);

}  // namespace motforge::detail
