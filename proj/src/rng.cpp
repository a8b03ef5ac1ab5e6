#include "shotmix/rng.hpp"

#include <cmath>
#include <numbers>

#include "shotmix/error.hpp"

namespace shotmix {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed ^ mix64(stream + kGolden))) {}

std::uint64_t CounterRng::next_u64() {
  return mix64(key_ + (++counter_) * kGolden);
}

double CounterRng::next_double() {
  // 53 high bits -> [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::next_gaussian() {
  const double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t CounterRng::next_index(std::size_t n) {
  if (n == 0) fail_invalid("next_index: n must be positive");
  // Multiplicative range reduction; bias is negligible for n << 2^64.
  const unsigned __int128 wide =
      static_cast<unsigned __int128>(next_u64()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

std::size_t CounterRng::next_categorical(std::span<const double> weights) {
  if (weights.empty()) fail_invalid("next_categorical: empty weights");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w))
      fail_invalid("next_categorical: weights must be finite and nonnegative");
    total += w;
  }
  if (total <= 0.0) fail_invalid("next_categorical: weight sum must be positive");
  const double u = next_double() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    cum += weights[i];
    if (u < cum) return i;
  }
  return weights.size() - 1;
}

CounterRng CounterRng::fork(std::uint64_t stream) const {
  CounterRng child(0);
  child.key_ = mix64(key_ ^ mix64(stream * kGolden + 1));
  return child;
}

std::uint64_t CounterRng::stream_of(std::string_view label) {
  // FNV-1a 64.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace shotmix
