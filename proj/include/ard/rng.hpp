#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ard {

/** Stateless 64-bit mixing step (splitmix64); used to derive seed streams. */
std::uint64_t splitmix64(std::uint64_t x);

/**
 * Deterministic random generator.
 *
 * Wraps std::mt19937_64 (whose output sequence is fixed by the standard) and
 * performs all conversions to doubles/integers by hand, because the std
 * distribution classes are implementation-defined.  Identical seeds therefore
 * replay bit-identically on any platform.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /** Uniform double in [0, 1) with 53 random bits. */
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /** Uniform double in [lo, hi). */
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /** Uniform integer in {0, ..., n-1}; n >= 1. */
  int uniform_int(int n);

  /** Index drawn from n nonnegative weights (normalized internally). */
  int sample_weights(const double* w, int n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/** Independent generator for (master_seed, run_index, stream tag). */
Rng stream_rng(std::uint64_t master_seed, std::uint64_t run_index,
               std::string_view tag);

}  // namespace ard
