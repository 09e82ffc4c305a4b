#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace disco {

/// Seeded pseudo-random stream. Every random quantity in the library is drawn
/// through one of these so that runs are reproducible from a single seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream derived from a master seed and a name, e.g. "init".
  static Rng substream(std::uint64_t master, std::string_view name);
  /// Independent stream derived from a master seed and an integer index.
  static Rng substream(std::uint64_t master, std::uint64_t index);

  double uniform(double lo, double hi);
  double normal();
  bool bernoulli(double p);
  std::uint64_t next_u64();
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// 64-bit FNV-1a; stable across platforms, used for seeds and config hashes.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace disco
