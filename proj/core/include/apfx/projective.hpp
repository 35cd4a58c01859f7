#pragma once

// Finite-dimensional Volterra approximation maps and compact clamping.

#include <cstddef>
#include <vector>

#include "apfx/pathspace.hpp"

namespace apfx {

// Anchor nodes a + k(b-a)/n, k = 0..n.
struct ProjectionLevel {
  std::size_t n = 1;
  std::vector<double> anchor_nodes;

  // Grid stride between anchors; throws Errc::divisibility unless n divides N.
  std::size_t stride(const TimeGrid& grid) const;
  // True when every grid node is an anchor (the map is the identity).
  bool is_identity_on(const TimeGrid& grid) const { return stride(grid) == 1; }
};

ProjectionLevel make_level(const TimeGrid& grid, std::size_t n);

// Axis-aligned box lo <= x <= hi, per node and coordinate, shared by all scenarios.
class CompactBox {
 public:
  CompactBox(std::size_t node_count, std::size_t dim, std::vector<double> lo,
             std::vector<double> hi);

  static CompactBox uniform(const TimeGrid& grid, std::size_t dim, double lo, double hi);
  // [center_i - radius, center_i + radius] at every node.
  static CompactBox around(const TimeGrid& grid, std::span<const double> center, double radius);

  std::size_t node_count() const noexcept { return node_count_; }
  std::size_t dim() const noexcept { return dim_; }
  double lo(std::size_t k, std::size_t i) const { return lo_[k * dim_ + i]; }
  double hi(std::size_t k, std::size_t i) const { return hi_[k * dim_ + i]; }

  bool contains(const PathEnsemble& x) const;

  friend bool operator==(const CompactBox&, const CompactBox&) = default;

 private:
  std::size_t node_count_;
  std::size_t dim_;
  std::vector<double> lo_;
  std::vector<double> hi_;
};

// Piecewise-linear interpolation through the anchor values, per scenario and
// coordinate. Output on [anchor_k, anchor_{k+1}] reads the input only at those
// two anchors, so agreement of inputs up to an anchor carries to the outputs.
PathEnsemble volterra_interp(const PathEnsemble& x, const ProjectionLevel& level);

// Causal triangular-kernel smoothing of volterra_interp(x); kernel supported on
// lags [0, (b-a)/n] with unit discrete mass.
PathEnsemble mollify(const PathEnsemble& x, const ProjectionLevel& level);

// Discrete kernel weights w_j (lag j steps) used by mollify, summing to 1/dt.
std::vector<double> mollifier_weights(const TimeGrid& grid, const ProjectionLevel& level);

PathEnsemble clamp_box(const PathEnsemble& x, const CompactBox& box);

struct ProjectionProbeRow {
  std::size_t n = 0;
  double distance = 0.0;
  double std_error = 0.0;
};

// d_sup(pi_n x, x) for each level.
std::vector<ProjectionProbeRow> property_pi_probe(const PathEnsemble& x,
                                                  const std::vector<ProjectionLevel>& levels);

}  // namespace apfx
