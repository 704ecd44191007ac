#ifndef SOSEKF_RNG_HPP
#define SOSEKF_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sosekf {

/// SplitMix64 generator (Steele, Lea, Flood 2014). Chosen over the
/// standard-library engines because its output sequence is fixed by the
/// algorithm itself, not by the implementation, so streams are
/// reproducible across platforms. Replicate r of an experiment uses
/// seed ^ r, which lands in an unrelated region of the state space.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; pairs are generated together and
  /// the second value cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = 1.0 - uniform01();  // in (0, 1], keeps log finite
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double phi = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(phi);
    have_cached_ = true;
    return r * std::cos(phi);
  }

 private:
  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace sosekf

#endif  // SOSEKF_RNG_HPP
