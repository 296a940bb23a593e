#pragma once

#include <bit>
#include <cstdint>

namespace gradloc {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream seed derived from a parent seed and a stream tag.
inline constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
  return splitmix64(parent ^ splitmix64(tag));
}

inline std::uint64_t derive_seed(std::uint64_t parent, double value) {
  return derive_seed(parent, std::bit_cast<std::uint64_t>(value));
}

}  // namespace gradloc
