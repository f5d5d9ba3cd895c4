#pragma once

#include <array>
#include <cstdint>

namespace critsde {

// Philox4x32-10 counter-based generator.  Streams are keyed by (seed, path)
// and indexed by (step, draw): any (path, step) pair can be generated in
// isolation, so parallel schedules reproduce serial results bit for bit.
struct Philox4x32 {
  static constexpr std::uint32_t kW32A = 0x9E3779B9u;
  static constexpr std::uint32_t kW32B = 0xBB67AE85u;
  static constexpr std::uint32_t kM4x32A = 0xD2511F53u;
  static constexpr std::uint32_t kM4x32B = 0xCD9E8D57u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key);
};

// One stream per (seed, path).  normal_pair(step, draw) maps one Philox
// block to two standard normals by Box-Muller; the 32-bit uniforms truncate
// the normal tail at |z| ~ 6.66, which is negligible at Monte Carlo scale
// (P(|Z| > 6.66) ~ 2.7e-11 per draw).
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t path) : seed_(seed), path_(path) {}

  std::array<double, 2> normal_pair(std::uint64_t step,
                                    std::uint32_t draw = 0) const;
  double normal(std::uint64_t step, std::uint32_t draw = 0) const {
    return normal_pair(step, draw)[0];
  }
  std::array<double, 2> uniform_pair(std::uint64_t step,
                                     std::uint32_t draw = 0) const;

 private:
  std::uint64_t seed_, path_;
};

}  // namespace critsde
