#pragma once

#include <cstdint>
#include <random>

namespace ipw {

/// Reproducible random source.
///
/// The engine is std::mt19937_64, whose output sequence is pinned by the C++
/// standard. The std:: distribution adaptors are implementation-defined, so
/// every transform used by the library (uniform real, bounded integer,
/// standard normal) is implemented here. Same seed gives the same draws on
/// every conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();

  /// Uniform integer on [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via the Marsaglia polar method.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for sub-stream `stream` of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Order-sensitive hash of a small tuple of integers.
std::uint64_t hash_combine(std::uint64_t seed, std::int64_t a, std::int64_t b,
                           std::int64_t c, std::int64_t d = 0);

/// Maps a 64-bit hash to [0, 1).
inline double to_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace ipw
