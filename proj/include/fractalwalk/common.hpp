#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fractalwalk {

/// Exact half-integer, stored as twice its value. Gromov products on graphs
/// are half-integers, and keeping them exact avoids float ties downstream.
struct Half {
  int twice = 0;
  double value() const { return 0.5 * twice; }
  friend bool operator==(Half a, Half b) { return a.twice == b.twice; }
  friend bool operator<(Half a, Half b) { return a.twice < b.twice; }
  friend Half operator-(Half a, Half b) { return {a.twice - b.twice}; }
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A horizontal-edge test that cannot be settled at the cloud-depth cap;
/// gamma sits on a decision boundary for this pair.
struct UndecidableEdgeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// SplitMix64. Streams are derived from (seed, index), so parallel consumers
/// are bitwise reproducible under any schedule.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  static SplitMix64 stream(std::uint64_t seed, std::uint64_t index) {
    return SplitMix64(mix(seed ^ mix(index + 1)));
  }

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t state_;
};

}  // namespace fractalwalk
