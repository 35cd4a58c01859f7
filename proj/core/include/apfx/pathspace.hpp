#pragma once

// Discretized spaces of adapted random points.
//
// A random point is represented by M i.i.d. scenarios of paths on a uniform
// time grid. The filtration at node k is the information carried by the
// driver increments 0..k-1 of the same scenario, so "adapted" means "node k
// of scenario m is a function of driver increments (m, 0..k-1) only".

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace apfx {

class TimeGrid {
 public:
  TimeGrid(double a, double b, std::size_t steps);

  double start() const noexcept { return a_; }
  double end() const noexcept { return b_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t node_count() const noexcept { return steps_ + 1; }
  double dt() const noexcept { return dt_; }
  double node(std::size_t k) const { return nodes_[k]; }
  std::span<const double> nodes() const noexcept { return nodes_; }

  friend bool operator==(const TimeGrid& l, const TimeGrid& r) noexcept {
    return l.a_ == r.a_ && l.b_ == r.b_ && l.steps_ == r.steps_;
  }

 private:
  double a_;
  double b_;
  std::size_t steps_;
  double dt_;
  std::vector<double> nodes_;
};

// Throws Errc::invalid_range for b <= a, Errc::zero_steps for N == 0.
TimeGrid make_grid(double a, double b, std::size_t steps);

// Values laid out row-major as [scenario][node][coordinate].
class PathEnsemble {
 public:
  PathEnsemble(TimeGrid grid, std::size_t scenarios, std::size_t dim);
  // Rejects a wrong-sized buffer (shape_mismatch) or non-finite entries
  // (invalid_argument).
  PathEnsemble(TimeGrid grid, std::size_t scenarios, std::size_t dim, std::vector<double> values);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t scenarios() const noexcept { return scenarios_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t node_count() const noexcept { return grid_.node_count(); }
  std::size_t scenario_stride() const noexcept { return grid_.node_count() * dim_; }

  double& at(std::size_t m, std::size_t k, std::size_t i) {
    return values_[(m * grid_.node_count() + k) * dim_ + i];
  }
  double at(std::size_t m, std::size_t k, std::size_t i) const {
    return values_[(m * grid_.node_count() + k) * dim_ + i];
  }

  std::span<double> scenario(std::size_t m) {
    return {values_.data() + m * scenario_stride(), scenario_stride()};
  }
  std::span<const double> scenario(std::size_t m) const {
    return {values_.data() + m * scenario_stride(), scenario_stride()};
  }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool all_finite() const noexcept;
  bool same_shape(const PathEnsemble& other) const noexcept {
    return grid_ == other.grid_ && scenarios_ == other.scenarios_ && dim_ == other.dim_;
  }

  friend bool operator==(const PathEnsemble& l, const PathEnsemble& r) noexcept;

 private:
  TimeGrid grid_;
  std::size_t scenarios_;
  std::size_t dim_;
  std::vector<double> values_;
};

// Bitwise equality of the value buffers (distinguishes -0.0 and +0.0).
bool bitwise_equal(std::span<const double> l, std::span<const double> r) noexcept;

class DriverEnsemble {
 public:
  // increments laid out [scenario][step][coordinate]; paths are rebuilt as
  // left-to-right cumulative sums with paths[m][0] = 0.
  DriverEnsemble(TimeGrid grid, std::size_t scenarios, std::size_t dim, std::uint64_t seed,
                 std::vector<double> increments);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t scenarios() const noexcept { return scenarios_; }
  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t seed() const noexcept { return seed_; }

  double increment(std::size_t m, std::size_t j, std::size_t i) const {
    return increments_[(m * grid_.steps() + j) * dim_ + i];
  }
  double path(std::size_t m, std::size_t k, std::size_t i) const {
    return paths_[(m * grid_.node_count() + k) * dim_ + i];
  }
  std::span<const double> scenario_increments(std::size_t m) const {
    return {increments_.data() + m * grid_.steps() * dim_, grid_.steps() * dim_};
  }
  std::span<const double> scenario_path(std::size_t m) const {
    return {paths_.data() + m * grid_.node_count() * dim_, grid_.node_count() * dim_};
  }
  std::span<const double> increments() const noexcept { return increments_; }
  std::span<const double> paths() const noexcept { return paths_; }

  // The driver paths as an ensemble of dimension d_w.
  PathEnsemble as_paths() const;

  // Same increments with scenarios reordered: scenario m of the result is
  // scenario order[m] of this driver.
  DriverEnsemble permuted(std::span<const std::size_t> order) const;

 private:
  TimeGrid grid_;
  std::size_t scenarios_;
  std::size_t dim_;
  std::uint64_t seed_;
  std::vector<double> increments_;
  std::vector<double> paths_;
};

// Brownian increments ~ N(0, dt) per coordinate, keyed by (seed, m, j, i).
DriverEnsemble sample_driver(const TimeGrid& grid, std::size_t scenarios, std::size_t dim,
                             std::uint64_t seed);

// Shares increments 0..split-1 with sample_driver(.., shared_seed) and draws the
// remaining ones from tail_seed. Two calls with the same shared_seed and
// different tail seeds produce drivers that coincide on F_{t_split}.
DriverEnsemble sample_driver_coupled(const TimeGrid& grid, std::size_t scenarios, std::size_t dim,
                                     std::uint64_t shared_seed, std::uint64_t tail_seed,
                                     std::size_t split);

enum class Norm { sup, l1, l2 };

struct MetricEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

// Distance between two paths of the same shape ([node][coordinate] layout).
// sup: max |.| over nodes and coordinates; l1/l2: left-Riemann sums of the
// pointwise Euclidean norm.
double path_distance(std::span<const double> x, std::span<const double> y, std::size_t dim,
                     const TimeGrid& grid, Norm norm);

// d(x, y) = E min{||x - y||, 1}, estimated over scenarios.
MetricEstimate prob_metric(const PathEnsemble& x, const PathEnsemble& y, Norm norm);

}  // namespace apfx
