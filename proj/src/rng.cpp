#include "critsde/rng.hpp"

#include <cmath>

#include "critsde/common.hpp"

namespace critsde {

namespace {

inline std::uint32_t mul_hi(std::uint32_t a, std::uint32_t b) {
  return static_cast<std::uint32_t>(
      (static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b)) >> 32);
}

inline std::uint32_t mul_lo(std::uint32_t a, std::uint32_t b) {
  return a * b;
}

}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint32_t hi0 = mul_hi(kM4x32A, ctr[0]);
    const std::uint32_t lo0 = mul_lo(kM4x32A, ctr[0]);
    const std::uint32_t hi1 = mul_hi(kM4x32B, ctr[2]);
    const std::uint32_t lo1 = mul_lo(kM4x32B, ctr[2]);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW32A;
    key[1] += kW32B;
  }
  return ctr;
}

std::array<double, 2> PathRng::uniform_pair(std::uint64_t step,
                                            std::uint32_t draw) const {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(path_),
      static_cast<std::uint32_t>(path_ >> 32),
      static_cast<std::uint32_t>(step),
      static_cast<std::uint32_t>((step >> 32) ^
                                 (static_cast<std::uint64_t>(draw) << 16)),
  };
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed_),
      static_cast<std::uint32_t>(seed_ >> 32),
  };
  const auto word = Philox4x32::block(ctr, key);
  // (x + 1) / 2^32 lands in (0, 1]: u1 never hits 0, so log(u1) is finite.
  const double u1 = (static_cast<double>(word[0]) + 1.0) * 0x1p-32;
  const double u2 = (static_cast<double>(word[1]) + 1.0) * 0x1p-32;
  return {u1, u2};
}

std::array<double, 2> PathRng::normal_pair(std::uint64_t step,
                                           std::uint32_t draw) const {
  const auto u = uniform_pair(step, draw);
  const double r = std::sqrt(-2.0 * std::log(u[0]));
  const double phase = 2.0 * kPi * u[1];
  return {r * std::cos(phase), r * std::sin(phase)};
}

}  // namespace critsde
