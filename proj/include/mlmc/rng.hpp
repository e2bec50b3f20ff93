#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace mlmc {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-based generator: output n is a hash of (key, n). Streams derived
// with split() depend only on the parent key and the child index, so
// replication k is reproducible regardless of scheduling.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : key_(splitmix64(seed ^ 0x5DEECE66DULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

  Rng split(std::uint64_t child) const {
    Rng r;
    r.key_ = splitmix64(key_ ^ splitmix64(child + 0x632BE59BD9B4E019ULL));
    return r;
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = uniform();
    while (u <= 0.0) u = uniform();
    const double v = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u));
    spare_ = radius * std::sin(2.0 * M_PI * v);
    has_spare_ = true;
    return radius * std::cos(2.0 * M_PI * v);
  }

  // Number of fair coin flips up to and including the first success (J >= 1),
  // i.e. P(J = j) = 2^-j, truncated at cap.
  int geometric_half(int cap = 64) {
    const std::uint64_t word = (*this)();
    if (word == 0) return cap;
    const int j = std::countr_zero(word) + 1;
    return j < cap ? j : cap;
  }

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mlmc
