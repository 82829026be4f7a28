// Counter-based Gaussian draws. Every normal is a pure function of
// (seed, stream, index, component), so longer expansions extend the
// coefficient sequence of a path instead of reshuffling it.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace pwfbm {

/// Philox4x32 with ten rounds.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

namespace detail {

// Uniform on (0, 1] from 53 random bits.
inline double unit_open_closed(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

inline std::uint32_t zigzag(long n) {
  return n >= 0 ? static_cast<std::uint32_t>(2 * n) : static_cast<std::uint32_t>(-2 * n - 1);
}

}  // namespace detail

/// Two independent standard normals for coefficient index n (of either sign)
/// of replication `stream`, by Box-Muller on one Philox block. `component`
/// separates independent families drawn at the same index.
inline std::pair<double, double> normal_pair(std::uint64_t seed, std::uint64_t stream, long n,
                                             std::uint32_t component = 0) {
  const std::array<std::uint32_t, 4> ctr = {detail::zigzag(n), component,
                                            static_cast<std::uint32_t>(stream),
                                            static_cast<std::uint32_t>(stream >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                            static_cast<std::uint32_t>(seed >> 32)};
  const auto r = philox4x32_10(ctr, key);
  const double u1 = detail::unit_open_closed(r[0], r[1]);
  const double u2 = detail::unit_open_closed(r[2], r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

}  // namespace pwfbm
