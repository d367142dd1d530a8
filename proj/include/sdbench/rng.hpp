#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace sdbench {

// Seeded random stream used by every stochastic component.
//
// The engine is std::mt19937_64, whose output sequence is pinned by the
// C++ standard. The standard <random> distribution adaptors are NOT used
// because their value mappings are implementation-defined; the helpers
// below implement fixed mappings instead, so a (seed, call sequence) pair
// yields the same decisions on any conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n), n >= 1, via rejection sampling.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be >= 1");
    const std::uint64_t reject = (-n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t v = engine_();
      if (v >= reject) return v % n;
    }
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(below(n)); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return uniform() < p; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[index(v.size())];
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      using std::swap;
      swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sdbench
