#pragma once

#include <cstdint>

// Named, versioned RNG so every simulation result is reproducible from a
// master seed alone.  SplitMix64 (Steele/Lea/Flood): 64-bit state, one
// add + three xor-multiply-shift rounds per output.  Statistically strong
// enough for inverse-transform sampling and cheap enough to inline.

namespace freshcache {

// Finalizer round of SplitMix64.  Bijective on 64-bit ints.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Per-replication seeds are derived from the master seed, never from time
// or global state: replication k of a run is reproducible in isolation.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master + 0x9E3779B97F4A7C15ull * (index + 1));
}

struct SplitMix64 {
  std::uint64_t state = 0;

  SplitMix64() = default;
  explicit constexpr SplitMix64(std::uint64_t seed) : state(seed) {}

  constexpr std::uint64_t next_u64() {
    state += 0x9E3779B97F4A7C15ull;
    return mix64(state);
  }

  // Uniform in [0, 1): top 53 bits, so every value is exactly representable.
  constexpr double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Independent child stream; safe to hand to a worker thread.
  constexpr SplitMix64 split() { return SplitMix64{next_u64()}; }
};

} // namespace freshcache
