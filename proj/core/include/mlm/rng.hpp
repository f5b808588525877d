#ifndef MLM_RNG_HPP
#define MLM_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mlm {

// splitmix64 step; used to derive independent stream seeds so that
// per-cell / per-layer / per-fold generators never share state.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = mix64(base);
  for (auto t : tags) s = mix64(s ^ t);
  return s;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace mlm

#endif  // MLM_RNG_HPP
