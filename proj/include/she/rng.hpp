#pragma once

// Philox4x32-10 counter-based generator. Every draw is a pure function of
// (key, counter), so noise fields do not depend on traversal order.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace she {

using Philox4x32 = std::array<std::uint32_t, 4>;

inline Philox4x32 philox4x32(Philox4x32 ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
    ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
           std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint32_t stream = 0)
      : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)}, stream_(stream) {}

  Philox4x32 block(std::uint64_t index) const {
    return philox4x32({std::uint32_t(index), std::uint32_t(index >> 32), stream_, 0x5348u}, key_);
  }

  // Two independent uniforms in (0,1) with 53-bit resolution.
  std::array<double, 2> uniform2(std::uint64_t index) const {
    const auto b = block(index);
    const std::uint64_t a = (std::uint64_t(b[0]) << 21) ^ (std::uint64_t(b[1]) >> 11);
    const std::uint64_t c = (std::uint64_t(b[2]) << 21) ^ (std::uint64_t(b[3]) >> 11);
    constexpr double scale = 1.0 / 9007199254740992.0;
    return {(double(a & ((1ull << 53) - 1)) + 0.5) * scale, (double(c & ((1ull << 53) - 1)) + 0.5) * scale};
  }

  double uniform(std::uint64_t index) const { return uniform2(index)[0]; }

  std::uint64_t bits64(std::uint64_t index) const {
    const auto b = block(index);
    return (std::uint64_t(b[0]) << 32) | b[1];
  }

  // Standard normal for cell `index`; pairs of cells share one Box-Muller draw.
  double normal(std::uint64_t index) const {
    const auto u = uniform2(index >> 1);
    const double rad = std::sqrt(-2.0 * std::log(u[0]));
    const double ang = 2.0 * std::numbers::pi * u[1];
    return (index & 1) ? rad * std::sin(ang) : rad * std::cos(ang);
  }

private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_;
};

}  // namespace she
