#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <utility>

namespace insideout {

/// Counter-based random stream.
///
/// Draw i of a stream is a pure function of (key, i): the key is a hash of a
/// master seed and a path of indices (feature, repetition, ...), and the
/// output is the SplitMix64 finalizer applied to key + i * golden-gamma.
/// Streams derived from different paths are statistically independent, so
/// work split across threads produces the same numbers in any schedule.
///
/// All variate generators below are implemented here rather than through
/// <random> distributions, whose algorithms differ between standard
/// libraries.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed = 0) noexcept;

  /// Stream keyed by `seed` followed by each element of `path`.
  static RandomStream derive(std::uint64_t seed,
                             std::initializer_list<std::uint64_t> path) noexcept;

  /// Independent sub-stream; does not advance this stream.
  [[nodiscard]] RandomStream child(std::uint64_t index) const noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() noexcept;
  /// Uniform on (0, 1); never returns 0.
  double uniform_open01() noexcept;
  double uniform(double lo, double hi) noexcept;
  /// Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_index(std::uint64_t bound) noexcept;
  /// Unbiased integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
  bool bernoulli(double p) noexcept;

  double normal() noexcept;
  double normal(double mean, double stddev) noexcept;
  double exponential(double rate) noexcept;
  double weibull(double scale, double shape) noexcept;
  double gamma(double shape) noexcept;
  double beta(double alpha, double beta) noexcept;

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

 private:
  RandomStream(std::uint64_t key, std::uint64_t counter) noexcept
      : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

/// In-place Fisher-Yates shuffle driven by a RandomStream.
template <class RandomIt>
void shuffle(RandomIt first, RandomIt last, RandomStream& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.uniform_index(i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace insideout
