// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <array>
#include <cstdint>

namespace riskscope::numerics {

/// Deterministic, splittable random generator (xoshiro256++ seeded via splitmix64).
///
/// The same seed always produces the same stream, independent of platform.
/// Parallel components must not share an Rng; derive one per task with
/// `child(stream)`, which depends only on the construction seed and the stream
/// id, never on how much of this generator has been consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();

  /// Gamma(shape, scale) via Marsaglia-Tsang. Requires shape > 0, scale > 0.
  double gamma(double shape, double scale);

  /// Fixed-seed derived generator for stream `stream`.
  Rng child(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
};

}  // namespace riskscope::numerics
