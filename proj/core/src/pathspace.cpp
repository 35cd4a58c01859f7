#include "apfx/pathspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "apfx/error.hpp"
#include "apfx/parallel.hpp"
#include "apfx/rng.hpp"
#include "apfx/stats.hpp"

namespace apfx {

TimeGrid::TimeGrid(double a, double b, std::size_t steps) : a_(a), b_(b), steps_(steps) {
  if (!(std::isfinite(a) && std::isfinite(b)) || !(b > a)) {
    fail(Errc::invalid_range, "time grid needs a < b (got a=" + std::to_string(a) +
                                  ", b=" + std::to_string(b) + ")");
  }
  if (steps == 0) fail(Errc::zero_steps, "time grid needs at least one step");
  dt_ = (b - a) / static_cast<double>(steps);
  nodes_.resize(steps + 1);
  for (std::size_t k = 0; k < steps; ++k) nodes_[k] = a + static_cast<double>(k) * dt_;
  nodes_[steps] = b;
}

TimeGrid make_grid(double a, double b, std::size_t steps) { return TimeGrid(a, b, steps); }

PathEnsemble::PathEnsemble(TimeGrid grid, std::size_t scenarios, std::size_t dim)
    : grid_(std::move(grid)), scenarios_(scenarios), dim_(dim) {
  if (scenarios == 0 || dim == 0) {
    fail(Errc::invalid_argument, "ensemble needs at least one scenario and one coordinate");
  }
  values_.assign(scenarios_ * grid_.node_count() * dim_, 0.0);
}

PathEnsemble::PathEnsemble(TimeGrid grid, std::size_t scenarios, std::size_t dim,
                           std::vector<double> values)
    : grid_(std::move(grid)), scenarios_(scenarios), dim_(dim), values_(std::move(values)) {
  if (scenarios == 0 || dim == 0) {
    fail(Errc::invalid_argument, "ensemble needs at least one scenario and one coordinate");
  }
  if (values_.size() != scenarios_ * grid_.node_count() * dim_) {
    fail(Errc::shape_mismatch, "ensemble buffer has " + std::to_string(values_.size()) +
                                   " entries, expected " +
                                   std::to_string(scenarios_ * grid_.node_count() * dim_));
  }
  if (!all_finite()) fail(Errc::invalid_argument, "ensemble contains non-finite values");
}

bool PathEnsemble::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool bitwise_equal(std::span<const double> l, std::span<const double> r) noexcept {
  return l.size() == r.size() &&
         (l.empty() || std::memcmp(l.data(), r.data(), l.size() * sizeof(double)) == 0);
}

bool operator==(const PathEnsemble& l, const PathEnsemble& r) noexcept {
  return l.same_shape(r) && bitwise_equal(l.values_, r.values_);
}

DriverEnsemble::DriverEnsemble(TimeGrid grid, std::size_t scenarios, std::size_t dim,
                               std::uint64_t seed, std::vector<double> increments)
    : grid_(std::move(grid)),
      scenarios_(scenarios),
      dim_(dim),
      seed_(seed),
      increments_(std::move(increments)) {
  if (scenarios == 0 || dim == 0) {
    fail(Errc::invalid_argument, "driver needs at least one scenario and one coordinate");
  }
  const std::size_t steps = grid_.steps();
  if (increments_.size() != scenarios * steps * dim) {
    fail(Errc::shape_mismatch, "driver increment buffer has the wrong size");
  }
  const std::size_t nodes = grid_.node_count();
  paths_.assign(scenarios * nodes * dim, 0.0);
  for (std::size_t m = 0; m < scenarios; ++m) {
    double* p = paths_.data() + m * nodes * dim;
    const double* inc = increments_.data() + m * steps * dim;
    for (std::size_t j = 0; j < steps; ++j) {
      for (std::size_t i = 0; i < dim; ++i) {
        p[(j + 1) * dim + i] = p[j * dim + i] + inc[j * dim + i];
      }
    }
  }
}

PathEnsemble DriverEnsemble::as_paths() const {
  return PathEnsemble(grid_, scenarios_, dim_, paths_);
}

DriverEnsemble DriverEnsemble::permuted(std::span<const std::size_t> order) const {
  if (order.size() != scenarios_) fail(Errc::shape_mismatch, "permutation size mismatch");
  const std::size_t stride = grid_.steps() * dim_;
  std::vector<double> inc(increments_.size());
  for (std::size_t m = 0; m < scenarios_; ++m) {
    std::copy_n(increments_.data() + order[m] * stride, stride, inc.data() + m * stride);
  }
  return DriverEnsemble(grid_, scenarios_, dim_, seed_, std::move(inc));
}

namespace {

void fill_increments(std::vector<double>& inc, const TimeGrid& grid, std::size_t scenarios,
                     std::size_t dim, std::uint64_t seed, std::size_t first_step,
                     std::size_t last_step) {
  const CounterRng rng(seed, Stream::driver);
  const double scale = std::sqrt(grid.dt());
  const std::size_t steps = grid.steps();
  parallel_for(scenarios, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t m = begin; m < end; ++m) {
      for (std::size_t j = first_step; j < last_step; ++j) {
        for (std::size_t i = 0; i < dim; ++i) {
          inc[(m * steps + j) * dim + i] = scale * rng.normal(m, j, static_cast<std::uint32_t>(i));
        }
      }
    }
  });
}

}  // namespace

DriverEnsemble sample_driver(const TimeGrid& grid, std::size_t scenarios, std::size_t dim,
                             std::uint64_t seed) {
  if (scenarios == 0 || dim == 0) {
    fail(Errc::invalid_argument, "sample_driver needs M >= 1 and d_w >= 1");
  }
  std::vector<double> inc(scenarios * grid.steps() * dim);
  fill_increments(inc, grid, scenarios, dim, seed, 0, grid.steps());
  return DriverEnsemble(grid, scenarios, dim, seed, std::move(inc));
}

DriverEnsemble sample_driver_coupled(const TimeGrid& grid, std::size_t scenarios, std::size_t dim,
                                     std::uint64_t shared_seed, std::uint64_t tail_seed,
                                     std::size_t split) {
  if (scenarios == 0 || dim == 0) {
    fail(Errc::invalid_argument, "sample_driver needs M >= 1 and d_w >= 1");
  }
  if (split > grid.steps()) fail(Errc::invalid_argument, "split beyond the last node");
  std::vector<double> inc(scenarios * grid.steps() * dim);
  fill_increments(inc, grid, scenarios, dim, shared_seed, 0, split);
  fill_increments(inc, grid, scenarios, dim, tail_seed, split, grid.steps());
  return DriverEnsemble(grid, scenarios, dim, shared_seed, std::move(inc));
}

double path_distance(std::span<const double> x, std::span<const double> y, std::size_t dim,
                     const TimeGrid& grid, Norm norm) {
  const std::size_t nodes = grid.node_count();
  if (norm == Norm::sup) {
    double worst = 0.0;
    for (std::size_t e = 0; e < nodes * dim; ++e) worst = std::max(worst, std::abs(x[e] - y[e]));
    return worst;
  }
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < nodes; ++k) {
    double sq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double diff = x[k * dim + i] - y[k * dim + i];
      sq += diff * diff;
    }
    acc += (norm == Norm::l1 ? std::sqrt(sq) : sq) * grid.dt();
  }
  return norm == Norm::l1 ? acc : std::sqrt(acc);
}

MetricEstimate prob_metric(const PathEnsemble& x, const PathEnsemble& y, Norm norm) {
  if (!x.same_shape(y)) fail(Errc::shape_mismatch, "prob_metric needs ensembles of equal shape");
  std::vector<double> capped(x.scenarios());
  parallel_for(x.scenarios(), [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t m = begin; m < end; ++m) {
      capped[m] = std::min(path_distance(x.scenario(m), y.scenario(m), x.dim(), x.grid(), norm), 1.0);
    }
  });
  const auto est = stats::mean_se(capped);
  return {est.mean, est.std_error, x.scenarios()};
}

}  // namespace apfx
