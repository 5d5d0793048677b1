#pragma once

#include <cstdint>
#include <random>

namespace vitcod {

// Seedable 64-bit generator used everywhere randomness is needed.
//
// Engine: std::mt19937_64 (MT19937-64, fully specified by the C++ standard).
// uniform():  (next() >> 11) * 2^-53, a double in [0, 1).
// normal():   Box-Muller on two uniform() draws, cosine branch only.
// The distribution adaptors from <random> are avoided on purpose: their
// algorithms are implementation-defined, these are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

}  // namespace vitcod
