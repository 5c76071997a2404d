#pragma once

#include <cstdint>
#include <random>

namespace qchain {

/// Deterministic pseudo-random stream confined to one replication.
///
/// The raw engine is mt19937_64, whose output sequence is fixed by the C++
/// standard; the variate transforms below are written out by hand so draws
/// are identical across standard library implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate);

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint32_t uniform_below(std::uint32_t n);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

/// SplitMix64 finalizer; a bijection on 64-bit values.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for replication `replication` of grid point `grid_index`. Distinct
/// (grid_index, replication) pairs below 2^32 always yield distinct seeds.
constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t grid_index,
                                    std::uint64_t replication) {
  return base_seed ^ mix64((grid_index << 32) | (replication & 0xffffffffULL));
}

}  // namespace qchain
