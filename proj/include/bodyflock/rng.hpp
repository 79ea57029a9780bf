#pragma once

// Random streams. `Rng` is a sequential 64-bit engine for samplers; `CounterRng`
// is a stateless Philox4x32-10 keyed by (seed, step, agent) so that particle
// noise does not depend on evaluation order or thread partition.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

#include "bodyflock/so3.hpp"

namespace bodyflock {

/// 53-bit uniform in (0, 1).
inline double uniform_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Sequential generator with portable uniform/normal transforms (the std
/// distributions are implementation-defined, which breaks cross-platform
/// bit reproducibility).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return uniform_open(engine_()); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double phi = 2.0 * kPi * uniform();
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Uniform point on S^2 from two uniforms.
inline Vec3 sphere_point(double u1, double u2) {
  const double z = 2.0 * u1 - 1.0;
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = 2.0 * kPi * u2;
  return {r * std::cos(phi), r * std::sin(phi), z};
}

template <class G>
Vec3 uniform_sphere(G& g) {
  const double u1 = g.uniform();
  const double u2 = g.uniform();
  return sphere_point(u1, u2);
}

/// Philox4x32-10 counter-based generator.
class CounterRng {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit CounterRng(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Block operator()(std::uint64_t c0, std::uint64_t c1) const {
    Block ctr{static_cast<std::uint32_t>(c0), static_cast<std::uint32_t>(c0 >> 32),
              static_cast<std::uint32_t>(c1), static_cast<std::uint32_t>(c1 >> 32)};
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

  /// Two 53-bit uniforms for counter (c0, c1).
  std::array<double, 2> uniforms(std::uint64_t c0, std::uint64_t c1) const {
    const Block b = (*this)(c0, c1);
    const std::uint64_t x = (std::uint64_t{b[0]} << 32) | b[1];
    const std::uint64_t y = (std::uint64_t{b[2]} << 32) | b[3];
    return {uniform_open(x), uniform_open(y)};
  }

  /// Standard normal 3-vector for (step, agent).
  Vec3 normal3(std::uint64_t step, std::uint64_t agent) const {
    const auto a = uniforms(step, agent << 1);
    const auto b = uniforms(step, (agent << 1) | 1u);
    const double r1 = std::sqrt(-2.0 * std::log(a[0]));
    const double r2 = std::sqrt(-2.0 * std::log(b[0]));
    const double p1 = 2.0 * kPi * a[1];
    const double p2 = 2.0 * kPi * b[1];
    return {r1 * std::cos(p1), r1 * std::sin(p1), r2 * std::cos(p2)};
  }

 private:
  std::array<std::uint32_t, 2> key_;
};

}  // namespace bodyflock
