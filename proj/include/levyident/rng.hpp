#pragma once

#include <cstdint>
#include <random>

namespace levyident {

// SplitMix64 finalizer; used as a stand-alone mixer and for seed expansion.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Replication seed = 64-bit hash of (master seed, replication index), so
// parallel replications own independent streams and results do not depend
// on the worker count.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x517cc1b727220a95ULL));
}

using RngEngine = std::mt19937_64;

inline RngEngine make_engine(std::uint64_t seed) { return RngEngine(splitmix64(seed)); }

}  // namespace levyident
