#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cutkit {

inline constexpr const char* kVersion = "0.1.0";

using Vec3 = Eigen::Vector3d;

// Deterministic splitmix64 generator. All randomness in the toolkit flows
// from a single seed through derive() streams, so parallel workers produce
// order-independent results and every run is reproducible bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  // Standard normal via Box-Muller; implementation-defined distributions from
  // <random> are avoided so draws match across platforms.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Child generator for an independent stream; streams never share state.
  static Rng derive(std::uint64_t seed, std::uint64_t stream) {
    Rng a(seed);
    Rng b(stream ^ 0x632BE59BD9B4E019ULL);
    return Rng(a.next_u64() ^ (b.next_u64() + 0x9E3779B97F4A7C15ULL));
  }

 private:
  std::uint64_t state_;
};

std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

// FNV-1a of a file's bytes; throws std::runtime_error when unreadable.
std::uint64_t hash_file(const std::string& path);

}  // namespace cutkit
