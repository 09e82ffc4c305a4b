#include "disco/rng.hpp"

#include <cmath>
#include <numbers>

namespace disco {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

// 53 random mantissa bits -> [0, 1).
double unit_interval(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : engine_(seeded_engine(seed, 0x9e3779b97f4a7c15ULL)) {}

Rng Rng::substream(std::uint64_t master, std::string_view name) {
  Rng rng(0);
  rng.engine_ = seeded_engine(master, fnv1a64(name));
  return rng;
}

Rng Rng::substream(std::uint64_t master, std::uint64_t index) {
  Rng rng(0);
  rng.engine_ = seeded_engine(master ^ 0xd1b54a32d192ed03ULL, index);
  return rng;
}

// The standard distributions are implementation-defined; these are written out
// so that streams are identical across standard libraries.
double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * unit_interval(engine_); }

double Rng::normal() {
  // Box-Muller, one variate per call.
  double u1 = unit_interval(engine_);
  while (u1 <= 0.0) u1 = unit_interval(engine_);
  const double u2 = unit_interval(engine_);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool Rng::bernoulli(double p) { return unit_interval(engine_) < p; }

std::uint64_t Rng::next_u64() { return engine_(); }

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace disco
