#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cgem::rng {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stream seed derived from a master seed, a purpose label and up to two
// indices. All randomness in the project flows through this scheme so that a
// single user seed keys every stream and streams are stable under any worker
// count.
inline uint64_t derive(uint64_t master, std::string_view purpose, uint64_t a = 0,
                       uint64_t b = 0) {
  uint64_t h = splitmix64(master ^ 0x6c8e9cf570932bd5ULL);
  h = splitmix64(h ^ fnv1a64(purpose));
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return h;
}

inline std::mt19937_64 stream(uint64_t master, std::string_view purpose,
                              uint64_t a = 0, uint64_t b = 0) {
  return std::mt19937_64(derive(master, purpose, a, b));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform(g);
}

// Uniform integer in [0, n).
inline uint64_t uniform_index(std::mt19937_64& g, uint64_t n) {
  return static_cast<uint64_t>(uniform(g) * static_cast<double>(n)) % n;
}

}  // namespace cgem::rng
