#include <cstring>

#include "apfx/error.hpp"
#include "apfx/operators.hpp"
#include "apfx/rng.hpp"

namespace apfx {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::optional<std::size_t> first_difference(std::span<const double> a, std::span<const double> b) {
  for (std::size_t e = 0; e < a.size(); ++e) {
    if (std::memcmp(&a[e], &b[e], sizeof(double)) != 0) return e;
  }
  return std::nullopt;
}

}  // namespace

PathEnsemble random_input(const TimeGrid& grid, std::size_t scenarios, std::size_t dim,
                          std::uint64_t seed, std::uint64_t tag) {
  const CounterRng rng(seed, Stream::test_input);
  PathEnsemble x(grid, scenarios, dim);
  const std::size_t stride = x.scenario_stride();
  for (std::size_t m = 0; m < scenarios; ++m) {
    auto s = x.scenario(m);
    for (std::size_t e = 0; e < stride; ++e) s[e] = rng.normal(m, (tag << 24) | e);
  }
  return x;
}

LocalityReport locality_check(const OperatorDescriptor& op, const PathEnsemble& x,
                              const PathEnsemble& y, const DriverEnsemble& driver,
                              std::size_t trials, std::uint64_t seed) {
  if (!x.same_shape(y)) fail(Errc::shape_mismatch, "locality_check needs inputs of equal shape");
  const PathEnsemble hx = apply(op, x, driver);
  const PathEnsemble hy = apply(op, y, driver);
  const CounterRng rng(seed, Stream::splice);
  const std::size_t scenarios = x.scenarios();

  LocalityReport report;
  report.trials = trials;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::vector<bool> in_a(scenarios);
    PathEnsemble z = y;
    for (std::size_t m = 0; m < scenarios; ++m) {
      in_a[m] = rng.uniform(trial, m) < 0.5;
      if (in_a[m]) {
        const auto src = x.scenario(m);
        std::copy(src.begin(), src.end(), z.scenario(m).begin());
      }
    }
    const PathEnsemble hz = apply(op, z, driver);
    bool ok = true;
    for (std::size_t m = 0; m < scenarios && ok; ++m) {
      const auto& ref = in_a[m] ? hx : hy;
      if (const auto e = first_difference(hz.scenario(m), ref.scenario(m))) {
        ok = false;
        if (!report.first_counterexample) {
          LocalityCounterexample ce;
          ce.trial = trial;
          for (std::size_t s = 0; s < scenarios; ++s) {
            if (in_a[s]) ce.subset.push_back(s);
          }
          ce.where = {m, *e / hz.dim(), *e % hz.dim()};
          ce.inside_subset = in_a[m];
          report.first_counterexample = std::move(ce);
        }
      }
    }
    ok ? ++report.passed : ++report.failed;
  }
  return report;
}

AdaptednessReport adaptedness_check(const DriverMap& map, const ProblemDims& dims,
                                    std::size_t split, std::size_t trials, std::uint64_t seed) {
  if (split > dims.grid.steps()) {
    fail(Errc::invalid_argument, "split index " + std::to_string(split) + " beyond N=" +
                                     std::to_string(dims.grid.steps()));
  }
  AdaptednessReport report;
  report.split = split;
  report.trials = trials;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::uint64_t base = splitmix(seed ^ splitmix(trial));
    const auto w1 = sample_driver_coupled(dims.grid, dims.scenarios, dims.driver_dim, base,
                                          splitmix(base + 1), split);
    const auto w2 = sample_driver_coupled(dims.grid, dims.scenarios, dims.driver_dim, base,
                                          splitmix(base + 2), split);
    const PathEnsemble y1 = map(w1);
    const PathEnsemble y2 = map(w2);
    if (!y1.same_shape(y2)) fail(Errc::shape_mismatch, "map output shape depends on the driver");
    const std::size_t prefix = (split + 1) * y1.dim();
    bool ok = true;
    for (std::size_t m = 0; m < y1.scenarios() && ok; ++m) {
      const auto a = y1.scenario(m).first(prefix);
      const auto b = y2.scenario(m).first(prefix);
      if (const auto e = first_difference(a, b)) {
        ok = false;
        if (!report.first_failure) {
          report.first_failure = {trial, Location{m, *e / y1.dim(), *e % y1.dim()}};
        }
      }
    }
    ok ? ++report.passed : ++report.failed;
  }
  return report;
}

AdaptednessReport adaptedness_check(const OperatorDescriptor& op, const ProblemDims& dims,
                                    std::size_t split, std::size_t trials, std::uint64_t seed) {
  // One input per trial, identical under both drivers of the pair.
  std::size_t calls = 0;
  PathEnsemble input = random_input(dims.grid, dims.scenarios, dims.dim, seed, 0);
  const DriverMap map = [&](const DriverEnsemble& w) {
    if (calls % 2 == 0) input = random_input(dims.grid, dims.scenarios, dims.dim, seed, calls / 2);
    ++calls;
    return apply(op, input, w);
  };
  return adaptedness_check(map, dims, split, trials, seed);
}

}  // namespace apfx
