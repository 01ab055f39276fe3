#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace urnfield {

/// SplitMix64 finalizer. Used only to derive well-separated seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of run `run_index` under `master_seed`.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index) noexcept {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(run_index + 0x632be59bd9b4e019ULL));
}

/// Random stream with platform-independent variates.
///
/// The engine is std::mt19937_64 (fully specified by the standard); variates
/// are built from its raw 64-bit output rather than <random> distributions,
/// whose algorithms are implementation-defined.
class Stream {
 public:
  explicit Stream(std::uint64_t seed = 0) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Unit-rate exponential.
  double exponential() noexcept { return -std::log(uniform_open()); }

  std::uint64_t next_u64() noexcept { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace urnfield
