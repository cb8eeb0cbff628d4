#include "ard/rng.hpp"

#include <stdexcept>

namespace ard {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int Rng::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be >= 1");
  // Rejection sampling over the largest multiple of n below 2^64.
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return static_cast<int>(x % un);
}

int Rng::sample_weights(const double* w, int n) {
  if (n <= 0) throw std::invalid_argument("Rng::sample_weights: empty weights");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (w[i] < 0.0) throw std::invalid_argument("Rng::sample_weights: negative weight");
    total += w[i];
  }
  if (total <= 0.0) throw std::invalid_argument("Rng::sample_weights: zero total weight");
  const double u = uniform() * total;
  double acc = 0.0;
  int last_positive = 0;
  for (int i = 0; i < n; ++i) {
    if (w[i] > 0.0) last_positive = i;
    acc += w[i];
    if (u < acc) return i;
  }
  return last_positive;  // guards against rounding at u ~ total
}

Rng stream_rng(std::uint64_t master_seed, std::uint64_t run_index,
               std::string_view tag) {
  std::uint64_t h = splitmix64(master_seed);
  h = splitmix64(h ^ (0x51a2b3c4d5e6f708ULL + run_index));
  for (unsigned char c : tag) h = splitmix64(h ^ c);
  return Rng(h);
}

}  // namespace ard
