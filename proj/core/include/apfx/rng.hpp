#pragma once

#include <array>
#include <cstdint>

namespace apfx {

// Philox4x32-10 (Salmon et al., SC'11). A keyed bijection on 128-bit counters,
// so every draw is a pure function of (key, counter).
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t key) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  Block operator()(Block counter) const noexcept;

 private:
  std::array<std::uint32_t, 2> key_;
};

// Independent sub-streams. Each consumer keys its draws by its own tag so that
// e.g. driver increments never collide with battery parameters.
enum class Stream : std::uint32_t {
  driver = 1,
  battery = 2,
  pair_sampling = 3,
  splice = 4,
  test_input = 5,
  perturbation = 6,
};

// Counter-based source: draw(i, j, lane) depends only on (seed, stream, i, j, lane).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream stream) noexcept
      : philox_(seed), stream_(static_cast<std::uint32_t>(stream)) {}

  // Uniform on (0, 1], 53-bit resolution.
  double uniform(std::uint64_t i, std::uint64_t j, std::uint32_t lane = 0) const noexcept;

  // Standard normal via Box-Muller on one Philox block; lane selects the variate.
  double normal(std::uint64_t i, std::uint64_t j, std::uint32_t lane = 0) const noexcept;

  // Raw 64 bits.
  std::uint64_t bits(std::uint64_t i, std::uint64_t j, std::uint32_t lane = 0) const noexcept;

 private:
  Philox4x32::Block block(std::uint64_t i, std::uint64_t j, std::uint32_t word) const noexcept;

  Philox4x32 philox_;
  std::uint32_t stream_;
};

}  // namespace apfx
