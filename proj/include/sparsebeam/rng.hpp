#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace sparsebeam {

// SplitMix64 (Steele/Lea/Vigna). Small, fast, and trivially splittable:
// independent streams are derived by hashing (master seed, stream index),
// so Monte Carlo trials can be dispatched in any order or thread count and
// still draw identical values.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on (0, 1], 53-bit resolution. Never 0, so log() is safe.
  double next_unit() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  // Circular complex normal with E|z|^2 = 1 (real and imaginary parts are
  // each N(0, 1/2)), via the polar form of Box-Muller.
  std::complex<double> next_complex_normal() {
    const double radius = std::sqrt(-std::log(next_unit()));
    const double angle = 2.0 * std::numbers::pi * next_unit();
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  static std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace sparsebeam
