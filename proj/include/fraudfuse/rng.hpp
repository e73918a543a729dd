#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace fraudfuse {

namespace detail {
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(uint64_t h, const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace detail

// Stable sub-seed derivation: hash of (master seed, tags). Independent of
// scenario ordering or thread scheduling, identical across runs and platforms.
inline uint64_t derive_seed(uint64_t master, std::string_view tag_a, std::string_view tag_b = {}) {
  uint64_t h = 0xcbf29ce484222325ULL;
  h = detail::fnv1a64(h, &master, sizeof(master));
  h = detail::fnv1a64(h, tag_a.data(), tag_a.size());
  h = detail::fnv1a64(h, "/", 1);
  h = detail::fnv1a64(h, tag_b.data(), tag_b.size());
  return detail::splitmix64(h);
}

inline uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t index) {
  uint64_t h = 0xcbf29ce484222325ULL;
  h = detail::fnv1a64(h, &master, sizeof(master));
  h = detail::fnv1a64(h, tag.data(), tag.size());
  h = detail::fnv1a64(h, &index, sizeof(index));
  return detail::splitmix64(h);
}

// mt19937_64 engine with hand-rolled transforms. The engine's output sequence
// is fixed by the C++ standard; std::*_distribution is not, so the transforms
// live here to keep generated datasets byte-identical everywhere.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() { return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller (no state carried between draws).
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform integer in [0, n); multiply-shift keeps it branch-free.
  uint64_t uniform_int(uint64_t n) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(eng_()) * n) >> 64);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace fraudfuse
