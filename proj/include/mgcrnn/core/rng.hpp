#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mgcrnn {

/// Seeded deterministic generator. Wraps std::mt19937_64 (whose output
/// sequence is fixed by the standard) and derives every variate from raw
/// 64-bit draws so results do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  /// Independent child stream keyed by a tag; the parent's state is untouched.
  [[nodiscard]] Rng split(std::string_view tag) const;
  [[nodiscard]] Rng split(std::uint64_t index) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  /// Poisson variate; exact inversion for small means, rounded normal approximation above 60.
  std::uint64_t poisson(double mean);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// 64-bit mixing function (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

}  // namespace mgcrnn
