#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fedmrl {

/// xoshiro256** (Blackman & Vigna) seeded through splitmix64.
///
/// All distributions are implemented here rather than taken from <random>,
/// whose distribution algorithms are implementation-defined. Given the same
/// seed the integer stream is identical on every platform; floating-point
/// draws additionally depend on the platform's libm for log/cos/pow.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Unbiased uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n);
  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();
  /// Gamma(shape, 1), Marsaglia-Tsang; shape < 1 uses the U^(1/a) boost.
  double gamma(double shape);
  /// Symmetric Dirichlet(alpha, ..., alpha) of dimension n.
  std::vector<double> dirichlet(double alpha, std::size_t n);

  /// Fisher-Yates, iterating from the back.
  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(i));
      std::swap(values[i - 1], values[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& values) {
    shuffle(std::span<T>(values));
  }

  /// Independent generator for a sub-stream, derived from this generator's
  /// seed (not its current state), so it is schedule-independent.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
};

/// One splitmix64 step; exposed for seeding and hashing.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace fedmrl
