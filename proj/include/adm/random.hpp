#pragma once

// Counter-based random streams.
//
// Every random quantity in the library is drawn from a stream whose key is
// derived from (seed, purpose, indices...). Nothing is shared between
// threads, so results do not depend on scheduling or worker count.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace adm {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over bytes; used for naming substreams and content digests.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hierarchical key for a random stream.
class StreamKey {
 public:
  constexpr StreamKey() = default;
  constexpr explicit StreamKey(std::uint64_t seed) noexcept : value_(mix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  [[nodiscard]] constexpr StreamKey sub(std::uint64_t index) const noexcept {
    StreamKey k;
    k.value_ = mix64(value_ + 0x9e3779b97f4a7c15ULL * (index + 1));
    return k;
  }
  [[nodiscard]] constexpr StreamKey sub(std::string_view name) const noexcept { return sub(fnv1a64(name)); }

  [[nodiscard]] constexpr std::uint64_t value() const noexcept { return value_; }
  constexpr bool operator==(const StreamKey&) const = default;

 private:
  std::uint64_t value_ = 0;
};

/// Counter-based generator: the i-th output is mix64(key + i * golden).
/// Satisfies UniformRandomBitGenerator, so it plugs into <random> distributions.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(StreamKey key) noexcept : key_(key.value()) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return mix64(key_ + counter_);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() { return normal_(*this); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(*this);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline double logistic(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace adm
