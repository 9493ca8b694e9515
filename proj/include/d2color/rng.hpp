#pragma once

#include <cstdint>
#include <limits>

namespace d2 {

/// SplitMix64 finalizer; used to derive independent stream keys.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator keyed by an arbitrary tuple of integers.
///
/// The kernel hands every node a fresh stream per round keyed by
/// (seed, stream, node, round), so the draws a node sees never depend on the
/// order in which nodes are evaluated. Satisfies UniformRandomBitGenerator.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng() = default;
  explicit StreamRng(std::uint64_t key) : state_(mix64(key)) {}
  StreamRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t node, std::uint64_t round)
      : state_(mix_keys(mix_keys(mix_keys(seed, stream), node), round)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    ++draws_;
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept {
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = (*this)();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1).
  double unit() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) noexcept {
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return unit() < p;
  }

  /// Uniform bit string of the given width (≤ 64).
  std::uint64_t bits(unsigned width) noexcept {
    if (width == 0) return 0;
    const std::uint64_t x = (*this)();
    return width >= 64 ? x : (x & ((std::uint64_t{1} << width) - 1));
  }

  std::uint64_t draws() const noexcept { return draws_; }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t draws_ = 0;
};

}  // namespace d2
