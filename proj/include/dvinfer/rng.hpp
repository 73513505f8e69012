#pragma once

#include <cstdint>

namespace dvinfer {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: draw i of stream `key` is a pure function of
/// (key, i), so two engines seeded alike consume identical variates.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : key_(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL)) {}

  constexpr std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform in [0, 1) with 53 random bits.
  constexpr double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  constexpr double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

  [[nodiscard]] constexpr std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace dvinfer
