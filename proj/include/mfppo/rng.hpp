#ifndef MFPPO_RNG_HPP
#define MFPPO_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mfppo {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream keyed by a path of integers, e.g. {seed, k, phase, t}.
// Used so that parallel sample generation stays seed-reproducible.
inline Rng make_stream(std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t v : path) h = splitmix64(h ^ splitmix64(v));
  return Rng(h);
}

// 53-bit uniform in [0, 1); avoids implementation-defined distributions.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

}  // namespace mfppo

#endif  // MFPPO_RNG_HPP
