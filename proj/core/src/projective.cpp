#include "apfx/projective.hpp"

#include <algorithm>
#include <cmath>

#include "apfx/error.hpp"
#include "apfx/parallel.hpp"
#include "kernels.hpp"

namespace apfx {

std::size_t ProjectionLevel::stride(const TimeGrid& grid) const {
  if (n == 0 || grid.steps() % n != 0) {
    fail(Errc::divisibility, "projection level n=" + std::to_string(n) +
                                 " does not divide the grid step count N=" +
                                 std::to_string(grid.steps()));
  }
  return grid.steps() / n;
}

ProjectionLevel make_level(const TimeGrid& grid, std::size_t n) {
  if (n == 0) fail(Errc::invalid_argument, "projection level needs n >= 1");
  ProjectionLevel level;
  level.n = n;
  level.anchor_nodes.resize(n + 1);
  const double width = grid.end() - grid.start();
  for (std::size_t k = 0; k < n; ++k) {
    level.anchor_nodes[k] = grid.start() + width * static_cast<double>(k) / static_cast<double>(n);
  }
  level.anchor_nodes[n] = grid.end();
  (void)level.stride(grid);
  return level;
}

CompactBox::CompactBox(std::size_t node_count, std::size_t dim, std::vector<double> lo,
                       std::vector<double> hi)
    : node_count_(node_count), dim_(dim), lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != node_count * dim || hi_.size() != node_count * dim) {
    fail(Errc::shape_mismatch, "box bounds have the wrong size");
  }
  for (std::size_t e = 0; e < lo_.size(); ++e) {
    if (!std::isfinite(lo_[e]) || !std::isfinite(hi_[e]) || lo_[e] > hi_[e]) {
      fail(Errc::invalid_argument, "box needs finite bounds with lo <= hi");
    }
  }
}

CompactBox CompactBox::uniform(const TimeGrid& grid, std::size_t dim, double lo, double hi) {
  const std::size_t size = grid.node_count() * dim;
  return CompactBox(grid.node_count(), dim, std::vector<double>(size, lo),
                    std::vector<double>(size, hi));
}

CompactBox CompactBox::around(const TimeGrid& grid, std::span<const double> center, double radius) {
  const std::size_t dim = center.size();
  std::vector<double> lo(grid.node_count() * dim), hi(grid.node_count() * dim);
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    for (std::size_t i = 0; i < dim; ++i) {
      lo[k * dim + i] = center[i] - radius;
      hi[k * dim + i] = center[i] + radius;
    }
  }
  return CompactBox(grid.node_count(), dim, std::move(lo), std::move(hi));
}

bool CompactBox::contains(const PathEnsemble& x) const {
  if (x.node_count() != node_count_ || x.dim() != dim_) return false;
  for (std::size_t m = 0; m < x.scenarios(); ++m) {
    const auto path = x.scenario(m);
    for (std::size_t e = 0; e < path.size(); ++e) {
      if (path[e] < lo_[e] || path[e] > hi_[e]) return false;
    }
  }
  return true;
}

PathEnsemble volterra_interp(const PathEnsemble& x, const ProjectionLevel& level) {
  const std::size_t stride = level.stride(x.grid());
  PathEnsemble out(x.grid(), x.scenarios(), x.dim());
  parallel_for(x.scenarios(), [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t m = begin; m < end; ++m) {
      detail::interp_path(x.scenario(m), out.scenario(m), x.dim(), x.node_count(), stride);
    }
  });
  return out;
}

std::vector<double> mollifier_weights(const TimeGrid& grid, const ProjectionLevel& level) {
  const std::size_t width = level.stride(grid);
  std::vector<double> w(width + 1, 0.0);
  double mass = 0.0;
  for (std::size_t j = 0; j <= width; ++j) {
    const double u = 2.0 * static_cast<double>(j) / static_cast<double>(width) - 1.0;
    w[j] = std::max(0.0, 1.0 - std::abs(u));
    mass += w[j];
  }
  if (mass == 0.0) {
    // Support of a single step: the bump collapses to a point mass at lag 0.
    w.assign(1, 1.0);
    mass = 1.0;
  }
  for (double& v : w) v /= mass * grid.dt();
  return w;
}

PathEnsemble mollify(const PathEnsemble& x, const ProjectionLevel& level) {
  const std::size_t stride = level.stride(x.grid());
  const auto weights = mollifier_weights(x.grid(), level);
  PathEnsemble out(x.grid(), x.scenarios(), x.dim());
  parallel_for(x.scenarios(), [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<double> tmp(x.scenario_stride());
    for (std::size_t m = begin; m < end; ++m) {
      detail::interp_path(x.scenario(m), tmp, x.dim(), x.node_count(), stride);
      detail::convolve_causal(tmp, out.scenario(m), x.dim(), x.node_count(), weights,
                              x.grid().dt());
    }
  });
  return out;
}

PathEnsemble clamp_box(const PathEnsemble& x, const CompactBox& box) {
  if (box.node_count() != x.node_count() || box.dim() != x.dim()) {
    fail(Errc::shape_mismatch, "box shape does not match the ensemble");
  }
  PathEnsemble out(x.grid(), x.scenarios(), x.dim());
  const std::size_t nodes = x.node_count();
  for (std::size_t m = 0; m < x.scenarios(); ++m) {
    for (std::size_t k = 0; k < nodes; ++k) {
      for (std::size_t i = 0; i < x.dim(); ++i) {
        out.at(m, k, i) = std::clamp(x.at(m, k, i), box.lo(k, i), box.hi(k, i));
      }
    }
  }
  return out;
}

std::vector<ProjectionProbeRow> property_pi_probe(const PathEnsemble& x,
                                                  const std::vector<ProjectionLevel>& levels) {
  for (const auto& level : levels) (void)level.stride(x.grid());
  std::vector<ProjectionProbeRow> rows;
  rows.reserve(levels.size());
  for (const auto& level : levels) {
    const auto d = prob_metric(volterra_interp(x, level), x, Norm::sup);
    rows.push_back({level.n, d.value, d.std_error});
  }
  return rows;
}

}  // namespace apfx
