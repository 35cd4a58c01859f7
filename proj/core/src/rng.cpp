#include "apfx/rng.hpp"

#include <cmath>
#include <numbers>

namespace apfx {
namespace {

constexpr std::uint32_t kMulA = 0xD2511F53;
constexpr std::uint32_t kMulB = 0xCD9E8D57;
constexpr std::uint32_t kWeylA = 0x9E3779B9;
constexpr std::uint32_t kWeylB = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

inline double to_unit(std::uint64_t bits) {
  // (0, 1]: never zero so log() in Box-Muller is finite.
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Block Philox4x32::operator()(Block ctr) const noexcept {
  std::array<std::uint32_t, 2> key = key_;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMulA, ctr[0], lo0, hi0);
    mulhilo(kMulB, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeylA;
    key[1] += kWeylB;
  }
  return ctr;
}

Philox4x32::Block CounterRng::block(std::uint64_t i, std::uint64_t j, std::uint32_t word) const noexcept {
  // 128-bit counter: i and j take 48 bits each, word and stream 16 bits each.
  const std::uint32_t c0 = static_cast<std::uint32_t>(i);
  const std::uint32_t c1 = (static_cast<std::uint32_t>(i >> 32) & 0xFFFFu) | (word << 16);
  const std::uint32_t c2 = static_cast<std::uint32_t>(j);
  const std::uint32_t c3 = (static_cast<std::uint32_t>(j >> 32) & 0xFFFFu) | (stream_ << 16);
  return philox_({c0, c1, c2, c3});
}

std::uint64_t CounterRng::bits(std::uint64_t i, std::uint64_t j, std::uint32_t lane) const noexcept {
  const auto b = block(i, j, lane / 2);
  const std::size_t o = (lane % 2) * 2;
  return (static_cast<std::uint64_t>(b[o]) << 32) | b[o + 1];
}

double CounterRng::uniform(std::uint64_t i, std::uint64_t j, std::uint32_t lane) const noexcept {
  return to_unit(bits(i, j, lane));
}

double CounterRng::normal(std::uint64_t i, std::uint64_t j, std::uint32_t lane) const noexcept {
  const auto b = block(i, j, lane / 2);
  const double u1 = to_unit((static_cast<std::uint64_t>(b[0]) << 32) | b[1]);
  const double u2 = to_unit((static_cast<std::uint64_t>(b[2]) << 32) | b[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (lane % 2 == 0) ? r * std::cos(angle) : r * std::sin(angle);
}

}  // namespace apfx
