#include "gaussot/rng.hpp"

#include <cmath>

namespace gaussot {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
}

std::uint64_t SeededRng::mix(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

std::uint64_t SeededRng::next_u64() {
  ++counter_;
  return mix(seed_ + counter_ * kGolden);
}

double SeededRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the log finite.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t stable_hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = SeededRng::mix(a + kGolden);
  h = SeededRng::mix(h ^ (b + kGolden * 2));
  h = SeededRng::mix(h ^ (c + kGolden * 3));
  return h;
}

}  // namespace gaussot
