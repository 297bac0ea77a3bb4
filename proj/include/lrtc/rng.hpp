#pragma once

#include <cstdint>
#include <random>

namespace lrtc {

/// Seeded PRNG used for every random draw in the toolkit.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are implementation-defined, so the
/// conversions to doubles, bounded integers and normals are done here:
/// uniform() takes the top 53 bits, below() uses rejection sampling and
/// normal() is Box-Muller.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 finalizer; derives independent stream seeds from a base seed.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace lrtc
