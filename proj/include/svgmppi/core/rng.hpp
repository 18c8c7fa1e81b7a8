#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace svgmppi {

/// Counter-based pseudo-random number generation.
///
/// Every random quantity in the library is a pure function of
/// (seed, stream id, counter), so sampling is reproducible bit-for-bit
/// regardless of thread count or scheduling order. The generator is
/// Threefry-2x64 with 20 rounds.
namespace rng {

namespace detail {

inline constexpr std::uint64_t kSkeinParity = 0x1BD11BDADA9FC1A5ULL;
inline constexpr int kRotations[8] = {16, 42, 12, 31, 16, 32, 24, 21};

inline std::uint64_t rotl64(std::uint64_t x, int r) {
  return (x << r) | (x >> (64 - r));
}

}  // namespace detail

/// One Threefry-2x64-20 block: maps a 128-bit counter under a 128-bit key
/// to 128 bits of output.
inline std::array<std::uint64_t, 2> threefry2x64(std::uint64_t ctr0, std::uint64_t ctr1,
                                                 std::uint64_t key0, std::uint64_t key1) {
  const std::uint64_t ks[3] = {key0, key1, detail::kSkeinParity ^ key0 ^ key1};
  std::uint64_t x0 = ctr0 + ks[0];
  std::uint64_t x1 = ctr1 + ks[1];
  for (int round = 0; round < 20; ++round) {
    x0 += x1;
    x1 = detail::rotl64(x1, detail::kRotations[round & 7]);
    x1 ^= x0;
    if ((round & 3) == 3) {
      const int s = round / 4 + 1;
      x0 += ks[s % 3];
      x1 += ks[(s + 1) % 3] + static_cast<std::uint64_t>(s);
    }
  }
  return {x0, x1};
}

/// Identifies an independent random stream. Streams with distinct ids never
/// share output for any counter value.
struct Stream {
  std::uint64_t seed = 0;
  std::uint64_t id = 0;
};

/// Stream purposes; kept disjoint so that e.g. enabling guide transport can
/// never perturb the draws seen by the main sampling stage.
enum class Purpose : std::uint64_t {
  kSampling = 1,      // main MPPI input sampling
  kGuideInit = 2,     // guide-particle (re)initialization
  kGuidePerturb = 3,  // Monte Carlo perturbations for surrogate gradients
  kObstacles = 4,     // per-lap obstacle placement
  kTest = 15,         // free-form use in tests
};

/// Builds a stream id from a purpose plus up to three sub-indices.
/// Layout: purpose(8) | a(8) | b(16) | c(32).
inline Stream make_stream(std::uint64_t seed, Purpose purpose, std::uint64_t c = 0,
                          std::uint64_t a = 0, std::uint64_t b = 0) {
  const std::uint64_t id = (static_cast<std::uint64_t>(purpose) << 56) |
                           ((a & 0xffULL) << 48) | ((b & 0xffffULL) << 32) |
                           (c & 0xffffffffULL);
  return Stream{seed, id};
}

/// Two uniforms in [0, 1) from one block.
inline std::array<double, 2> uniform_pair(const Stream& s, std::uint64_t ctr0,
                                          std::uint64_t ctr1) {
  const auto block = threefry2x64(ctr0, ctr1, s.seed, s.id);
  constexpr double kScale = 0x1.0p-53;
  return {static_cast<double>(block[0] >> 11) * kScale,
          static_cast<double>(block[1] >> 11) * kScale};
}

/// Two independent standard normals from one block (Box-Muller).
inline std::array<double, 2> normal_pair(const Stream& s, std::uint64_t ctr0,
                                         std::uint64_t ctr1) {
  const auto block = threefry2x64(ctr0, ctr1, s.seed, s.id);
  constexpr double kScale = 0x1.0p-53;
  // u1 in (0, 1] so that log(u1) is finite.
  const double u1 = static_cast<double>((block[0] >> 11) + 1) * kScale;
  const double u2 = static_cast<double>(block[1] >> 11) * kScale;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// Fills `out[0..n)` with standard normals drawn from (stream, ctr0).
/// Consecutive blocks use ctr1 = 0, 1, 2, ...
inline void fill_normals(const Stream& s, std::uint64_t ctr0, double* out, int n) {
  int i = 0;
  std::uint64_t block = 0;
  while (i < n) {
    const auto z = normal_pair(s, ctr0, block++);
    out[i++] = z[0];
    if (i < n) out[i++] = z[1];
  }
}

/// Uniform draw in [lo, hi).
inline double uniform_in(const Stream& s, std::uint64_t ctr0, std::uint64_t ctr1,
                         double lo, double hi) {
  return lo + uniform_pair(s, ctr0, ctr1)[0] * (hi - lo);
}

}  // namespace rng
}  // namespace svgmppi
