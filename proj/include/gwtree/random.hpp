#ifndef GWTREE_RANDOM_HPP
#define GWTREE_RANDOM_HPP

// Counter-based randomness. Every random object in the library owns a 64-bit
// key; child keys are derived by hashing (parent key, tag), so a draw is a
// pure function of the seed and the path that leads to it. Traversal order and
// thread count never change a result.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string_view>

namespace gwtree {

using Key = std::uint64_t;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr Key derive(Key parent, std::uint64_t tag) noexcept {
  return mix64(parent ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Named substream, e.g. derive(seed, "walk.estimate_return_integral").
constexpr Key derive(Key parent, std::string_view name) noexcept {
  return derive(parent, fnv1a(name));
}

/// Sequential stream of draws attached to one key. Satisfies
/// UniformRandomBitGenerator so it can drive std algorithms if needed.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Stream(Key key) noexcept : state_(mix64(key)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1); safe for log().
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer on [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Stream::below: n must be positive");
    while (true) {
      const std::uint64_t x = (*this)();
      const __uint128_t m = static_cast<__uint128_t>(x) * n;
      const auto low = static_cast<std::uint64_t>(m);
      if (low >= n || low >= (-n) % n) return static_cast<std::uint64_t>(m >> 64);
    }
  }

 private:
  std::uint64_t state_;
};

/// Poisson(mean) by sequential inversion. Intended for the small means that
/// occur in offspring laws; rejects means where exp(-mean) underflows.
inline std::uint64_t sample_poisson(Stream& rng, double mean) {
  if (!(mean >= 0.0) || mean > 700.0) {
    throw std::domain_error("sample_poisson: mean must lie in [0, 700]");
  }
  if (mean == 0.0) return 0;
  const double u = rng.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  while (u >= cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    const double next = cdf + p;
    if (next == cdf) break;  // tail exhausted in double precision
    cdf = next;
  }
  return k;
}

/// Poisson(mean) conditioned to be positive. mean -> 0 gives the constant 1.
inline std::uint64_t sample_positive_poisson(Stream& rng, double mean) {
  if (!(mean >= 0.0) || mean > 700.0) {
    throw std::domain_error("sample_positive_poisson: mean must lie in [0, 700]");
  }
  if (mean < 1e-300) return 1;
  const double u = rng.uniform();
  double p = mean / std::expm1(mean);
  double cdf = p;
  std::uint64_t k = 1;
  while (u >= cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    const double next = cdf + p;
    if (next == cdf) break;
    cdf = next;
  }
  return k;
}

inline std::uint64_t sample_binomial(Stream& rng, std::uint64_t trials, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error("sample_binomial: p must lie in [0, 1]");
  }
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < trials; ++i) hits += rng.uniform() < p ? 1 : 0;
  return hits;
}

}  // namespace gwtree

#endif  // GWTREE_RANDOM_HPP
