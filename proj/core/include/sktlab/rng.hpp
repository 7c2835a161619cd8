#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>

namespace sktlab {

/// Philox4x32-10 block function. Pure: the output
/// depends only on (counter, key), so streams can be addressed directly.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based stream of uniforms and normals.
///
/// A stream is identified by (seed, stream, substream); in the simulator that
/// is (run seed, path index, step index), so every Wiener increment of every
/// path can be regenerated independently.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t stream, std::uint32_t substream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream),
        substream_(substream) {}

  /// Uniform double in (0, 1] with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_;
  std::uint32_t substream_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// n x K matrix of i.i.d. N(0, dt) entries, drawn row by row.
Eigen::MatrixXd sample_wiener_increments(CounterRng& rng, int n, Eigen::Index modes, double dt);

}  // namespace sktlab
