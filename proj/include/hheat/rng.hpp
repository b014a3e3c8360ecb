#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace hheat {

/// Philox4x32-10 counter-based generator: a pure function of (key, counter).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  static Counter apply(Counter c, Key k) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k[0] += 0x9E3779B9u;
        k[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }
    return c;
  }

  Counter operator()(std::uint64_t index, std::uint64_t stream) const {
    return apply({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                  static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)},
                 key_);
  }

  /// Two uniforms in (0, 1) with 53-bit resolution.
  std::array<double, 2> uniforms(std::uint64_t index, std::uint64_t stream) const {
    const Counter r = (*this)(index, stream);
    return {to_open_unit((std::uint64_t{r[0]} << 32) | r[1]), to_open_unit((std::uint64_t{r[2]} << 32) | r[3])};
  }

  /// Two independent standard normals by Box-Muller.
  std::array<double, 2> normals(std::uint64_t index, std::uint64_t stream) const {
    const auto u = uniforms(index, stream);
    const double rad = std::sqrt(-2.0 * std::log(u[0]));
    const double ang = 2.0 * std::numbers::pi * u[1];
    return {rad * std::cos(ang), rad * std::sin(ang)};
  }

  static double to_open_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  Key key_;
};

/// Counter layout: ((step * n_substeps + substep) << 2) | component.
enum class StreamComponent : std::uint64_t { Increment = 0, BridgeKill = 1, Exact = 2 };

inline std::uint64_t stream_index(std::uint64_t substep_global, StreamComponent comp) {
  return (substep_global << 2) | static_cast<std::uint64_t>(comp);
}

}  // namespace hheat
