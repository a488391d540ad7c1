#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include "anchorpose/geometry.hpp"

namespace anchorpose {

/**
 * std::mt19937_64 with distributions defined here instead of <random>'s
 * implementation-defined ones, so sampled values are identical across standard
 * libraries.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n), n > 0, by rejection.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  /// Uniform direction on the unit sphere.
  Eigen::Vector3d unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * kPi<double>);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }

  /// Uniform (Haar) random rotation.
  Rotationd rotation() {
    const double u1 = uniform01();
    const double u2 = uniform(0.0, 2.0 * kPi<double>);
    const double u3 = uniform(0.0, 2.0 * kPi<double>);
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    return Rotationd(a * std::sin(u2), a * std::cos(u2), b * std::sin(u3), b * std::cos(u3));
  }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream seed derived from a base seed and string keys (e.g. estimator,
/// subject, frame), so per-query draws do not depend on evaluation order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::string_view> keys) {
  std::uint64_t h = splitmix64(seed);
  for (std::string_view key : keys) {
    std::uint64_t fnv = 0xcbf29ce484222325ULL;
    for (unsigned char c : key) {
      fnv ^= c;
      fnv *= 0x100000001b3ULL;
    }
    fnv ^= key.size();
    h = splitmix64(h ^ fnv);
  }
  return h;
}

}  // namespace anchorpose
