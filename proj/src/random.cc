#include "anchorloc/random.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace anchorloc {

Rng Rng::Derive(uint64_t seed, uint64_t stream) {
  // splitmix64 finalizer over (seed, stream).
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z = z ^ (z >> 31);
  return Rng(z);
}

double Rng::Uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

uint64_t Rng::UniformIndex(uint64_t n) {
  if (n <= 1) return 0;
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % n;
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::Normal() {
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::Vector3d Rng::UnitVector() {
  // Uniform on the sphere via z and azimuth.
  const double z = Uniform(-1.0, 1.0);
  const double phi = Uniform(0.0, 2.0 * std::numbers::pi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
}

Rotation3d Rng::RotationWithAngle(double angle) {
  return ExpSO3<double>(angle * UnitVector());
}

Rotation3d Rng::UniformRotation() {
  // Shoemake's method.
  const double u1 = Uniform();
  const double u2 = Uniform(0.0, 2.0 * std::numbers::pi);
  const double u3 = Uniform(0.0, 2.0 * std::numbers::pi);
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  return Rotation3d(a * std::cos(u2), a * std::sin(u2), b * std::sin(u3),
                    b * std::cos(u3));
}

std::vector<int> Rng::Sample(int n, int k) {
  std::vector<int> out;
  out.reserve(k);
  while (static_cast<int>(out.size()) < k) {
    const int idx = static_cast<int>(UniformIndex(n));
    if (std::find(out.begin(), out.end(), idx) == out.end()) {
      out.push_back(idx);
    }
  }
  return out;
}

}  // namespace anchorloc
