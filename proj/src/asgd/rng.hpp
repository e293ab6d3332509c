#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace asgd {

/// Purposes that get their own independent random stream. The numeric values
/// are part of the reproducibility contract: changing them changes every run.
enum class Stream : std::uint32_t {
  Partition = 1,
  Assignment = 2,
  NodeSampling = 3,
  Interleaving = 4,
  Synthetic = 5,
  Delivery = 6,
};

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit key is the user seed; the 128-bit counter is split into
/// (stream purpose, substream index, 64-bit block counter). Two generators
/// with different (purpose, substream) never share a counter value, so they
/// are independent for any seed, and every stream is reproducible on every
/// platform.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream purpose, std::uint32_t substream = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double next_double();
  /// Uniform in [0, bound) without modulo bias; bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound);
  /// Categorical draw over non-negative weights summing to ~1; returns index.
  std::size_t next_categorical(std::span<const double> cumulative);

  std::uint64_t seed() const { return key_; }

 private:
  void refill();

  std::uint64_t key_;
  std::uint32_t purpose_;
  std::uint32_t substream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

/// One Philox4x32-10 block; exposed for the known-answer test.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

}  // namespace asgd
