#pragma once

#include <cstdint>
#include <random>

namespace starbody {

// Counter-based seed splitting: every block of every sampling stream gets its
// own engine, seeded from (master seed, stream tag, block index). Results are
// therefore independent of how blocks are scheduled across workers.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

enum class Stream : std::uint64_t {
  sphere = 1,
  grassmannian = 2,
  interior = 3,
  hitmiss = 4,
  subspace_directions = 5,
  panel = 6,
  zp_cache = 7,
  instance = 8,
  pilot = 9,
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ splitmix64(tag)) + splitmix64(index ^ 0x5851f42d4c957f2dULL));
}

inline std::uint64_t derive_seed(std::uint64_t master, Stream s, std::uint64_t index = 0) {
  return derive_seed(master, static_cast<std::uint64_t>(s), index);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t master, Stream s, std::uint64_t block) {
  return Engine(derive_seed(master, s, block));
}

/// Samples are produced in fixed-size blocks; block b always holds samples
/// [b*kBlockSize, (b+1)*kBlockSize).
inline constexpr std::size_t kBlockSize = 4096;

inline std::size_t block_count(std::size_t n) { return (n + kBlockSize - 1) / kBlockSize; }

}  // namespace starbody
