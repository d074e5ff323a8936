#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>

namespace eventimp {

/// Philox4x32-10 counter-based generator. A (key, stream) pair names an
/// independent sequence, so every simulated path can own its stream and the
/// results do not depend on how paths are scheduled across threads.
class RandomStream {
 public:
  using result_type = std::uint32_t;

  RandomStream(std::uint64_t key, std::uint64_t stream);

  /// One Philox block for the given counter and key (exposed for testing).
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);

  /// Folds a root seed and a list of identifiers into a 64-bit stream key.
  static std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> parts);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ == 4) refill();
    return buffer_[used_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = (*this)() >> 5;  // 27 bits
    const std::uint64_t lo = (*this)() >> 6;  // 26 bits
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
  }

  /// Index drawn from a probability vector (assumed to sum to one).
  std::size_t categorical(std::span<const double> probabilities);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> buffer_{};
  unsigned used_ = 4;
};

}  // namespace eventimp
