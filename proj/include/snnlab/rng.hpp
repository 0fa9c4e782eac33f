#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace snnlab {

/// Counter-based pseudo-random generator. The n-th draw is a pure function
/// of (seed, stream, n), so runs replay bit-for-bit on any platform and
/// independent substreams never interleave. Distributions are built from
/// the raw bits directly instead of std::*_distribution, whose output is
/// implementation-defined.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ 0x853c49e6748fea9bULL) ^ mix(stream + 0xda3e39cb94b95bdbULL)) {}

  /// Derived generator with its own counter; draws are unrelated to the parent's.
  CounterRng substream(std::uint64_t id) const {
    CounterRng r(0);
    r.key_ = mix(key_ + 0x9e3779b97f4a7c15ULL * (id + 1));
    return r;
  }

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform in [-1, 1], the l-inf unit cube coordinate distribution.
  double symmetric() { return uniform(-1.0, 1.0); }

  /// Standard normal via Box-Muller. Consumes two draws per call.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace snnlab
