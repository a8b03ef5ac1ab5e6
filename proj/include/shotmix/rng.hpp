#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace shotmix {

/// Counter-based pseudorandom stream (splitmix64 evaluated at an arbitrary
/// counter position). The value at position n depends only on (key, n), so
/// draws at distinct positions are reproducible regardless of evaluation
/// order, and streams can be forked without sharing state.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double next_double();

  /// Standard normal via Box-Muller; consumes exactly two counter positions.
  double next_gaussian();

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t next_index(std::size_t n);

  /// Categorical draw by CDF inversion over nonnegative weights. Weights need
  /// not be normalized; their sum must be positive.
  std::size_t next_categorical(std::span<const double> weights);

  std::uint64_t position() const { return counter_; }
  void seek(std::uint64_t position) { counter_ = position; }

  /// Independent derived stream; deterministic in (this->key, stream).
  CounterRng fork(std::uint64_t stream) const;

  /// Derives a stream id from a label, for readable fork call sites.
  static std::uint64_t stream_of(std::string_view label);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace shotmix
