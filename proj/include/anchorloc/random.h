#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "anchorloc/geometry.h"

namespace anchorloc {

// Seedable generator with a platform-independent sequence. The engine is
// std::mt19937_64 (sequence fixed by the standard); all distributions are
// implemented here because the std:: distributions are not portable:
//   uniform double: top 53 bits of one draw scaled by 2^-53,
//   normal: Box-Muller on two uniform draws (no caching),
//   bounded integer: rejection sampling on the raw 64-bit draw.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Independent stream for a sub-task, e.g. one RANSAC call per edge.
  static Rng Derive(uint64_t seed, uint64_t stream);

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1).
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform in [0, n).
  uint64_t UniformIndex(uint64_t n);
  double Normal();
  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }

  Eigen::Vector3d UnitVector();
  Rotation3d RotationWithAngle(double angle);
  Rotation3d UniformRotation();

  // k distinct indices from [0, n), in draw order.
  std::vector<int> Sample(int n, int k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace anchorloc
