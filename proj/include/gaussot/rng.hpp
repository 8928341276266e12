#pragma once

#include <cstdint>

namespace gaussot {

// Counter-based deterministic generator: the n-th output is
// splitmix64_mix(seed + (n+1) * 0x9E3779B97F4A7C15), i.e. the SplitMix64
// stream anchored at `seed`. Same seed, same platform-independent stream;
// no sequential hidden state beyond the counter.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits.
  double uniform();

  // Standard normal via Box-Muller on consecutive uniforms; the second value
  // of each pair is cached.
  double normal();

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Order-sensitive mix of three integers into one 64-bit key; used to derive
// per-trial substream seeds.
std::uint64_t stable_hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace gaussot
