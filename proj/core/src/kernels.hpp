#pragma once

// Per-scenario path kernels shared by the ensemble-level functions and the
// operator evaluator, so that both routes produce identical bits.

#include <algorithm>
#include <cstddef>
#include <span>

namespace apfx::detail {

// Piecewise-linear interpolation through every `stride`-th node. Anchors are
// copied exactly; constants and exactly-linear anchor data stay exact.
inline void interp_path(std::span<const double> in, std::span<double> out, std::size_t dim,
                        std::size_t nodes, std::size_t stride) {
  for (std::size_t k = 0; k < nodes; ++k) {
    const std::size_t r = k % stride;
    if (r == 0) {
      for (std::size_t i = 0; i < dim; ++i) out[k * dim + i] = in[k * dim + i];
      continue;
    }
    const std::size_t left = k - r;
    const std::size_t right = left + stride;
    const double w = static_cast<double>(r) / static_cast<double>(stride);
    for (std::size_t i = 0; i < dim; ++i) {
      const double l = in[left * dim + i];
      out[k * dim + i] = l + w * (in[right * dim + i] - l);
    }
  }
}

// out(t_k) = sum_{j <= min(k, L)} w_j in(t_{k-j}) dt
inline void convolve_causal(std::span<const double> in, std::span<double> out, std::size_t dim,
                            std::size_t nodes, std::span<const double> weights, double dt) {
  for (std::size_t k = 0; k < nodes; ++k) {
    const std::size_t reach = std::min(k, weights.size() - 1);
    for (std::size_t i = 0; i < dim; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j <= reach; ++j) acc += weights[j] * in[(k - j) * dim + i] * dt;
      out[k * dim + i] = acc;
    }
  }
}

}  // namespace apfx::detail
