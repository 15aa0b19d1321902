#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dynsleuth {

/// SplitMix64 finalizer; used to spread seed material.
std::uint64_t mix64(std::uint64_t x);

/// Folds a path of labels into a base seed. Used to fan a single run seed
/// out into independent named substreams so parallel work stays reproducible.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

/// Deterministic random stream. Substreams are derived from the stream's
/// construction seed (not its consumed state), so derivation order never
/// depends on how many values were drawn.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  RngStream substream(std::initializer_list<std::uint64_t> path) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random mantissa bits.
  double next_double();
  double uniform_real(double lo, double hi);
  /// Uniform integer in [lo, hi], both inclusive. Unbiased via rejection.
  int uniform_int(int lo, int hi);
  bool bernoulli(double p);
  /// Standard normal (Box-Muller, pairs cached).
  double normal();

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace dynsleuth
