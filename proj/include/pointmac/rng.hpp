#pragma once

#include <cstdint>
#include <string_view>

namespace pointmac {

// Deterministic pseudo-random stream built on SplitMix64. The standard
// library distributions are implementation-defined, so every draw used by
// generators, corruption and training comes through this class to keep
// outputs bit-identical across platforms and runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // [0, 1) with 53 bits of mantissa.
  double uniform01();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller; the spare draw is cached so the
  // consumed stream stays a pure function of the call sequence.
  double normal();
  double normal(double mean, double sigma);

  // Inclusive bounds; rejection-sampled so the result is unbiased.
  int uniform_int(int lo, int hi);

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// 64-bit FNV-1a; used for sample-id -> seed derivation and file hashing.
std::uint64_t hash_str(std::string_view s);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

// Stable seed for a named stream, e.g. derive_seed(seed, "smr", iter).
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                          std::uint64_t index = 0);

}  // namespace pointmac
