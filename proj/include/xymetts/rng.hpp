#pragma once

#include <cstdint>
#include <random>

namespace xymetts {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent per-member stream: members can be added without disturbing
// earlier ones, and the mix decorrelates adjacent ids.
inline std::uint64_t member_seed(std::uint64_t master_seed, std::uint64_t member_id) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(member_id + 1));
}

using Rng = std::mt19937_64;

}  // namespace xymetts
