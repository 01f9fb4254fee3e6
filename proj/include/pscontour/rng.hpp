#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3"). A draw is a pure function of (key, counter),
// so streams keyed by (seed, sweep, site) are identical however the work is
// scheduled.

#include <array>
#include <cstdint>

namespace pscontour {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Counter operator()(Counter ctr) const {
    Key k = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k[0] += kWeyl0;
        k[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

  /// Two independent uniforms in [0, 1) for the counter (a, b, tag).
  std::array<double, 2> uniform2(std::uint64_t a, std::uint32_t b, std::uint32_t tag) const {
    const auto out = (*this)({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), b, tag});
    const std::uint64_t w0 = (std::uint64_t{out[0]} << 32) | out[1];
    const std::uint64_t w1 = (std::uint64_t{out[2]} << 32) | out[3];
    return {to_unit(w0), to_unit(w1)};
  }

  double uniform(std::uint64_t a, std::uint32_t b, std::uint32_t tag) const { return uniform2(a, b, tag)[0]; }

 private:
  static double to_unit(std::uint64_t w) { return static_cast<double>(w >> 11) * 0x1.0p-53; }

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  Key key_;
};

}  // namespace pscontour
