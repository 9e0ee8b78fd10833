#include "insideout/random.hpp"

#include <cmath>
#include <numbers>

namespace insideout {

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

RandomStream::RandomStream(std::uint64_t seed) noexcept
    : key_(mix64(seed + kGoldenGamma)) {}

RandomStream RandomStream::derive(std::uint64_t seed,
                                  std::initializer_list<std::uint64_t> path) noexcept {
  RandomStream stream(seed);
  for (auto p : path) stream = stream.child(p);
  return stream;
}

RandomStream RandomStream::child(std::uint64_t index) const noexcept {
  // Two rounds so that child(i) of key k never collides with draws of k.
  const std::uint64_t k = mix64(key_ ^ mix64(index * kGoldenGamma + 0x632BE59BD9B4E019ULL));
  return RandomStream(mix64(k + kGoldenGamma), 0);
}

std::uint64_t RandomStream::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGoldenGamma);
}

double RandomStream::uniform01() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform_open01() noexcept {
  double u = 0.0;
  do {
    u = uniform01();
  } while (u == 0.0);
  return u;
}

double RandomStream::uniform(double lo, double hi) noexcept {
  return lo + (hi - lo) * uniform01();
}

std::uint64_t RandomStream::uniform_index(std::uint64_t bound) noexcept {
  // Lemire's nearly-divisionless method.
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::int64_t RandomStream::uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(uniform_index(span));
}

bool RandomStream::bernoulli(double p) noexcept { return uniform01() < p; }

double RandomStream::normal() noexcept {
  // Box-Muller, no cached spare: every call consumes exactly two draws.
  const double u1 = uniform_open01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RandomStream::normal(double mean, double stddev) noexcept {
  return mean + stddev * normal();
}

double RandomStream::exponential(double rate) noexcept {
  return -std::log(uniform_open01()) / rate;
}

double RandomStream::weibull(double scale, double shape) noexcept {
  return scale * std::pow(-std::log(uniform_open01()), 1.0 / shape);
}

double RandomStream::gamma(double shape) noexcept {
  // Marsaglia & Tsang; shape < 1 boosted through shape + 1.
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform_open01(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RandomStream::beta(double alpha, double beta_param) noexcept {
  const double x = gamma(alpha);
  const double y = gamma(beta_param);
  const double s = x + y;
  // Both gammas underflow only for tiny shapes; split the mass evenly then.
  if (s <= 0.0) return bernoulli(alpha / (alpha + beta_param)) ? 1.0 : 0.0;
  return x / s;
}

}  // namespace insideout
