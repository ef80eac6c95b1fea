#pragma once

#include <array>
#include <cstdint>

#include "gtwalk/core.hpp"

namespace gtwalk {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: a key and a
/// 128-bit counter map to four 32-bit words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Streams are separated by purpose so that, e.g., Poisson clocks never share
/// draws with walk noise.
enum class StreamPurpose : std::uint32_t {
  WalkNoise = 0,
  Poisson = 1,
  OrnsteinUhlenbeck = 2,
  Radial = 3,
  Bootstrap = 4,
};

/// A reproducible random stream keyed by (master seed, path index, step index).
/// Draws within one stream are consumed sequentially; distinct keys give
/// statistically independent streams, so results do not depend on which
/// worker evaluates which path.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
               StreamPurpose purpose = StreamPurpose::WalkNoise);

  std::uint32_t next_u32();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal by Box-Muller; cached pair.
  double normal();
  /// Exponential with unit rate.
  double exponential();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Uniform sample on the closed unit ball of R^m: Gaussian direction scaled by
/// U^{1/m}. Always consumes the same number of draws for a given m.
Vector sample_unit_ball(int m, RandomStream& stream);

}  // namespace gtwalk
