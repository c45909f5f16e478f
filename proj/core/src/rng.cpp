#include "ipw/rng.hpp"

#include <cmath>

namespace ipw {

double Rng::uniform01() { return to_unit(engine_()); }

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection on the top of the range keeps the result unbiased.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n + 1) % n;
  std::uint64_t v = engine_();
  while (v > limit) v = engine_();
  return v % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0, v = 0.0, s = 0.0;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix64(mix64(master) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

std::uint64_t hash_combine(std::uint64_t seed, std::int64_t a, std::int64_t b,
                           std::int64_t c, std::int64_t d) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ static_cast<std::uint64_t>(a));
  h = mix64(h ^ static_cast<std::uint64_t>(b));
  h = mix64(h ^ static_cast<std::uint64_t>(c));
  h = mix64(h ^ static_cast<std::uint64_t>(d));
  return h;
}

}  // namespace ipw
