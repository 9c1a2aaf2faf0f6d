#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace logeuler::rng {

// Philox4x32-10 (Salmon et al., SC'11). Counter-based: the output is a pure
// function of (counter, key), so every draw can be addressed directly and
// any parallel partitioning reproduces the serial stream.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t(kMul0) * c[0];
    const std::uint64_t p1 = std::uint64_t(kMul1) * c[2];
    const auto hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
    const auto hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

// Purpose tags keep independent uses of one master seed from colliding.
enum class Stream : std::uint32_t {
  kFieldPhase = 1,
  kBrownian = 2,
  kPairSampling = 3,
  kSyntheticNoise = 4,
};

/// Draws addressed by (seed, stream, a, b, c). Each address yields four
/// 32-bit words: two uniforms in (0,1) or two standard normals.
class KeyedRandom {
 public:
  explicit KeyedRandom(std::uint64_t seed)
      : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)} {}

  Philox4x32::Counter words(Stream s, std::uint32_t a, std::uint32_t b, std::uint32_t c) const {
    return Philox4x32::apply({a, b, c, static_cast<std::uint32_t>(s)}, key_);
  }

  std::pair<double, double> uniforms(Stream s, std::uint32_t a, std::uint32_t b,
                                     std::uint32_t c) const {
    const auto w = words(s, a, b, c);
    return {to_open_unit(w[0], w[1]), to_open_unit(w[2], w[3])};
  }

  // Box-Muller on one uniform pair.
  std::pair<double, double> normals(Stream s, std::uint32_t a, std::uint32_t b,
                                    std::uint32_t c) const {
    const auto [u1, u2] = uniforms(s, a, b, c);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  static double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((std::uint64_t(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

 private:
  Philox4x32::Key key_;
};

}  // namespace logeuler::rng
