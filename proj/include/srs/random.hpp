#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace srs {

// Seedable random source with fully reproducible draws. mt19937_64 is
// specified bit-for-bit by the standard; the derived draws below avoid
// std::uniform_real_distribution / std::normal_distribution, whose output is
// implementation-defined, so traces replay identically across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0,1). Endpoint draws are rejected and
  // redrawn so a fresh threshold of 1 strictly dominates every key.
  double open_unit() {
    for (;;) {
      const double u =
          static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // [0,1)
      if (u > 0.0 && u < 1.0) return u;
    }
  }

  // Gaussian draw via the Box-Muller transform (two uniforms per draw).
  double gaussian(double mean, double sigma) {
    const double u1 = open_unit();
    const double u2 = open_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * radius * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace srs
