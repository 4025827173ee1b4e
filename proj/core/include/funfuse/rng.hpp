#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace funfuse {

/// Deterministic random source used throughout the library.
///
/// All randomness is drawn from a seeded std::mt19937_64 whose output
/// sequence is fixed by the C++ standard, with explicit mappings to
/// doubles (53-bit uniforms, Box-Muller normals). Results are therefore
/// reproducible across platforms and standard library implementations,
/// which std::normal_distribution would not guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller. Consumes exactly two engine draws;
  /// the spare value is discarded so the stream position is call-count
  /// deterministic.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Derives an independent stream seed from a master seed, used for
  /// per-replicate and per-curve streams in parallel generation.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream + 0x9E3779B97F4A7C15ull));
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace funfuse
