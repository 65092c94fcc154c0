#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace higsfa {

// Deterministic, portable random source.  The engine is std::mt19937_64
// (bit-exact across platforms); the uniform/normal transforms below are
// implemented here instead of using std::*_distribution, whose output is
// implementation-defined.  Substreams are derived with SplitMix64 so that
// independent components (signal channels, mixing matrices, noise) consume
// disjoint, reproducible streams:
//
//   Rng root(seed);
//   Rng noise = root.stream(3);   // stream ids are stable per component
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  // Substream derived from (seed, id); independent of draws made so far.
  Rng stream(std::uint64_t id) const { return Rng(split_mix(seed_ ^ (0x9E3779B97F4A7C15ULL * (id + 1)))); }

  std::uint64_t bits() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Inclusive integer range.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(bits() % span);
  }

  // Standard normal via Box-Muller; pairs are cached so one call consumes
  // exactly two uniforms every other invocation.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  std::uint64_t seed() const { return seed_; }

 private:
  static std::uint64_t split_mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace higsfa
