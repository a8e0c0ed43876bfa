#pragma once

#include <cstdint>

#include "svv/math_util.hpp"

namespace svv {

// 64-bit finalizer from SplitMix64; full avalanche, no state.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent seed from a master seed and two salts.  Used to give
// every nested-simulation block (e.g. each rebalance time) its own stream
// family that is reproducible and disjoint from the outer streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt_a,
                                    std::uint64_t salt_b) {
  std::uint64_t h = mix64(master ^ 0x1b873593a4c957f2ull);
  h = mix64(h ^ (salt_a + 0x165667b19e3779f9ull));
  h = mix64(h ^ (salt_b + 0x27d4eb2f165667c5ull));
  return h;
}

// Counter-based generator: every variate is a pure function of
// (master_seed, path_index, step, component).  No sequential state, so paths
// can be produced by any number of workers in any order with bit-identical
// results, and a single path can be regenerated in isolation.
class CounterRng {
 public:
  CounterRng(std::uint64_t master_seed, std::uint64_t path_index)
      : key_(mix64(mix64(master_seed ^ 0x8f1bbcdc2f6e4679ull) +
                   path_index * 0x9e3779b97f4a7c15ull)) {}

  // Uniform draw strictly inside (0, 1).
  double uniform(std::uint64_t step, std::uint32_t component) const {
    const std::uint64_t counter = (step << 8) | (component & 0xffu);
    const std::uint64_t bits = mix64(key_ + counter * 0x9e3779b97f4a7c15ull);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal draw via the inverse CDF (keeps the counter property).
  double normal(std::uint64_t step, std::uint32_t component) const {
    return normal_quantile(uniform(step, component));
  }

 private:
  std::uint64_t key_;
};

}  // namespace svv
