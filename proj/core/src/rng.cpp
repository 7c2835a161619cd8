#include "sktlab/rng.hpp"

#include <cmath>
#include <numbers>

#include "sktlab/error.hpp"

namespace sktlab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

void CounterRng::refill() {
  buffer_ = philox4x32({block_, substream_, stream_, 0u}, key_);
  ++block_;
  used_ = 0;
}

double CounterRng::uniform() {
  if (used_ > 2) refill();
  const std::uint64_t hi = buffer_[used_];
  const std::uint64_t lo = buffer_[used_ + 1];
  used_ += 2;
  const std::uint64_t bits = ((hi << 32) | lo) >> 11;
  // (bits + 1) / 2^53 lies in (0, 1], keeping log() finite
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

double CounterRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Eigen::MatrixXd sample_wiener_increments(CounterRng& rng, int n, Eigen::Index modes, double dt) {
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::InvalidArgument, "time step must be positive");
  require(n >= 1 && modes >= 0, ErrorCode::InvalidArgument, "increment shape must be positive");
  const double scale = std::sqrt(dt);
  Eigen::MatrixXd dw(n, modes);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < modes; ++k) dw(i, k) = scale * rng.normal();
  }
  return dw;
}

}  // namespace sktlab
