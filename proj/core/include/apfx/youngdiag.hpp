#pragma once

// Narrow-convergence diagnostics: expectations of bounded test functionals
// along the sequence of approximate fixed points.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "apfx/fixpoint.hpp"
#include "apfx/pathspace.hpp"

namespace apfx {

struct TestFunctional {
  using Rule = std::function<double(std::span<const double> path, std::span<const double> driver_path)>;

  std::string name;
  Rule rule;

  // Result clipped to [-1, 1].
  double operator()(std::span<const double> path, std::span<const double> driver_path) const;
};

// Deterministic battery of max(count, 5) functionals. The first five are fixed
// in kind: clipped endpoint norm, clipped sup norm, clipped time average, sine
// of a random linear functional, sin(x(t*) W(t*)) at a random node. Extra
// entries alternate between the last two kinds with fresh parameters.
std::vector<TestFunctional> test_battery(const TimeGrid& grid, std::size_t dim,
                                         std::size_t driver_dim, std::size_t count,
                                         std::uint64_t seed);

struct NarrowRow {
  std::string functional;
  std::size_t n = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double diff = 0.0;  // |E g(alpha_n) - E g(alpha_prev)|; NaN on the first level
};

struct NarrowTable {
  std::vector<NarrowRow> rows;
  std::vector<std::string> functionals;
  std::vector<bool> settling;  // differences decreasing up to one inversion

  double settling_fraction() const;
};

NarrowTable narrow_stats(const SchemeResult& result, const DriverEnsemble& driver,
                         const std::vector<TestFunctional>& battery);

// Same table for an arbitrary sequence of ensembles labelled by levels.
NarrowTable narrow_stats(std::span<const PathEnsemble> alphas, std::span<const std::size_t> levels,
                         const DriverEnsemble& driver, const std::vector<TestFunctional>& battery);

struct NodeMoment {
  std::size_t node = 0;
  std::size_t coord = 0;
  double mean = 0.0;
  double mean_se = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
};

struct WeakSummary {
  std::vector<NodeMoment> moments;
  std::vector<std::pair<double, double>> exceedance;  // (R, P{sup |x| > R})
};

WeakSummary weak_summary(const PathEnsemble& alpha, const DriverEnsemble& driver,
                         std::vector<double> radii = {0.5, 1.0, 2.0, 5.0, 10.0, 100.0});

// functional,n,estimate,se,diff
void write_csv(std::ostream& out, const NarrowTable& table);
// node_index,time,coord,mean,mean_se,variance,variance_se
void write_summary_csv(std::ostream& out, const WeakSummary& summary, const TimeGrid& grid);
// radius,probability
void write_exceedance_csv(std::ostream& out, const WeakSummary& summary);

}  // namespace apfx
