#pragma once

#include <cstdint>
#include <random>

#include "spegarch/types.hpp"

namespace spegarch {

// Deterministic random stream. A (seed, stream) pair is mixed through
// splitmix64 into the mt19937_64 state, so distinct streams derived from one
// seed are decorrelated and every draw sequence is reproducible across
// platforms: uniforms come straight from engine words and normals from the
// polar method, with no implementation-defined distributions involved.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Standard normal via Marsaglia's polar method.
  double normal();

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// n x t_len panel of independent standard normals, filled time point by time
// point so that a longer panel extends a shorter one drawn from the same seed.
Panel seeded_normal_panel(int n, int t_len, std::uint64_t seed,
                          PanelKind kind = PanelKind::Innovations);

}  // namespace spegarch
