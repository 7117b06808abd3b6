#pragma once

#include <cstdint>
#include <random>

#include "itm/linalg.hpp"

namespace itm {

/// Seedable generator with a platform-stable output stream.
///
/// std::mt19937_64's sequence is fixed by the standard; the distribution
/// mapping below is done by hand because std::uniform_real_distribution is
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
  }

  Vector uniform_vector(Eigen::Index n, double lo, double hi) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  /// Uniform direction on the Euclidean unit sphere (rejection from the cube).
  Vector unit_vector(Eigen::Index n) {
    for (;;) {
      Vector v = uniform_vector(n, -1.0, 1.0);
      const double norm = v.norm();
      if (norm > 1e-3 && (n > 3 || norm <= 1.0)) return v / norm;
    }
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace itm
