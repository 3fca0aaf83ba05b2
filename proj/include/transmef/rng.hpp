#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <utility>

namespace transmef {

/// SplitMix64 generator. Satisfies UniformRandomBitGenerator, but the helpers
/// below are used instead of <random> distributions so that sequences are
/// identical across standard library implementations.
///
/// Stream discipline: every consumer derives its own generator with
/// Rng::derive(seed, tag, index...) rather than sharing one instance, so
/// enabling or disabling one consumer never shifts another's sequence.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  /// Uniform integer on the closed range [lo, hi]. Unbiased (rejection).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Uniform double on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform double on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  template <class T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1)));
      std::swap(values[i - 1], values[j]);
    }
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
    for (unsigned char c : tag) {
      h ^= c;
      h *= 0x100000001B3ull;
    }
    return h;
  }

  /// Independent substream for (seed, tag, indices...).
  template <class... Ix>
  static Rng derive(std::uint64_t seed, std::string_view tag, Ix... indices) {
    std::uint64_t s = mix(seed ^ mix(hash_tag(tag)));
    ((s = mix(s ^ mix(static_cast<std::uint64_t>(indices) + 0x632BE59BD9B4E019ull))), ...);
    return Rng(s);
  }

 private:
  std::uint64_t state_;
};

inline std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>((*this)());
  const std::uint64_t limit = max() - max() % span;
  std::uint64_t r;
  do {
    r = (*this)();
  } while (r >= limit);
  return lo + static_cast<std::int64_t>(r % span);
}

}  // namespace transmef
