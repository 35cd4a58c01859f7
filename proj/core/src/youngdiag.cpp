#include "apfx/youngdiag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "apfx/ensemble_io.hpp"
#include "apfx/error.hpp"
#include "apfx/parallel.hpp"
#include "apfx/rng.hpp"
#include "apfx/stats.hpp"

namespace apfx {
namespace {

double clip1(double v) { return std::clamp(v, -1.0, 1.0); }

TestFunctional linear_sine(const CounterRng& rng, std::size_t f, std::size_t nodes, std::size_t dim) {
  const std::size_t len = nodes * dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(len));
  std::vector<double> c(len);
  for (std::size_t e = 0; e < len; ++e) c[e] = scale * rng.normal(f, e);
  return {"sin_linear_" + std::to_string(f),
          [c = std::move(c)](std::span<const double> x, std::span<const double>) {
            double acc = 0.0;
            for (std::size_t e = 0; e < c.size(); ++e) acc += c[e] * x[e];
            return std::sin(acc);
          }};
}

TestFunctional driver_coupled(const CounterRng& rng, std::size_t f, std::size_t nodes,
                              std::size_t dim, std::size_t driver_dim) {
  const std::size_t node = static_cast<std::size_t>(rng.bits(f, 0) % nodes);
  const std::size_t common = std::min(dim, driver_dim);
  return {"sin_xw_node_" + std::to_string(node) + "_" + std::to_string(f),
          [=](std::span<const double> x, std::span<const double> w) {
            double acc = 0.0;
            for (std::size_t i = 0; i < common; ++i) acc += x[node * dim + i] * w[node * driver_dim + i];
            return std::sin(acc);
          }};
}

// Expectation estimate that does not depend on scenario order.
stats::MeanEstimate symmetric_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return stats::mean_se(values);
}

}  // namespace

double TestFunctional::operator()(std::span<const double> path,
                                  std::span<const double> driver_path) const {
  const double v = rule(path, driver_path);
  if (std::isnan(v)) fail(Errc::operator_evaluation, "test functional " + name + " returned NaN");
  return clip1(v);
}

std::vector<TestFunctional> test_battery(const TimeGrid& grid, std::size_t dim,
                                         std::size_t driver_dim, std::size_t count,
                                         std::uint64_t seed) {
  if (count == 0) fail(Errc::invalid_argument, "battery count must be >= 1");
  if (dim == 0 || driver_dim == 0) fail(Errc::invalid_argument, "battery dimensions must be >= 1");
  const std::size_t nodes = grid.node_count();
  const CounterRng rng(seed, Stream::battery);

  std::vector<TestFunctional> battery;
  battery.push_back({"endpoint_norm", [=](std::span<const double> x, std::span<const double>) {
                       double acc = 0.0;
                       for (std::size_t i = 0; i < dim; ++i) {
                         const double v = x[(nodes - 1) * dim + i];
                         acc += v * v;
                       }
                       return std::min(std::sqrt(acc), 1.0);
                     }});
  battery.push_back({"sup_norm", [](std::span<const double> x, std::span<const double>) {
                       double worst = 0.0;
                       for (double v : x) worst = std::max(worst, std::abs(v));
                       return std::min(worst, 1.0);
                     }});
  battery.push_back({"time_average", [=](std::span<const double> x, std::span<const double>) {
                       double acc = 0.0;
                       for (double v : x) acc += v;
                       return acc / static_cast<double>(nodes * dim);
                     }});
  battery.push_back(linear_sine(rng, 3, nodes, dim));
  battery.push_back(driver_coupled(rng, 4, nodes, dim, driver_dim));
  for (std::size_t f = 5; f < count; ++f) {
    battery.push_back(f % 2 == 1 ? linear_sine(rng, f, nodes, dim)
                                 : driver_coupled(rng, f, nodes, dim, driver_dim));
  }
  return battery;
}

double NarrowTable::settling_fraction() const {
  if (settling.empty()) return 0.0;
  return static_cast<double>(std::count(settling.begin(), settling.end(), true)) /
         static_cast<double>(settling.size());
}

NarrowTable narrow_stats(std::span<const PathEnsemble> alphas, std::span<const std::size_t> levels,
                         const DriverEnsemble& driver, const std::vector<TestFunctional>& battery) {
  if (battery.empty()) fail(Errc::invalid_argument, "narrow_stats needs a nonempty battery");
  if (alphas.size() != levels.size()) fail(Errc::shape_mismatch, "one level label per ensemble required");
  for (const auto& a : alphas) {
    if (a.scenarios() != driver.scenarios() || !(a.grid() == driver.grid())) {
      fail(Errc::shape_mismatch, "ensemble and driver differ in grid or scenario count");
    }
  }

  NarrowTable table;
  for (const auto& g : battery) {
    table.functionals.push_back(g.name);
    std::vector<double> diffs;
    double prev = 0.0;
    for (std::size_t l = 0; l < alphas.size(); ++l) {
      const auto& alpha = alphas[l];
      std::vector<double> values(alpha.scenarios());
      parallel_for(alpha.scenarios(), [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t m = begin; m < end; ++m) values[m] = g(alpha.scenario(m), driver.scenario_path(m));
      });
      const auto est = symmetric_mean(std::move(values));
      double diff = std::numeric_limits<double>::quiet_NaN();
      if (l > 0) {
        diff = std::abs(est.mean - prev);
        diffs.push_back(diff);
      }
      prev = est.mean;
      table.rows.push_back({g.name, levels[l], est.mean, est.std_error, diff});
    }
    table.settling.push_back(stats::decrease_violations(diffs, false) <= 1);
  }
  return table;
}

NarrowTable narrow_stats(const SchemeResult& result, const DriverEnsemble& driver,
                         const std::vector<TestFunctional>& battery) {
  std::vector<std::size_t> levels;
  for (const auto& s : result.level_stats) levels.push_back(s.n);
  return narrow_stats(std::span<const PathEnsemble>(result.alphas), levels, driver, battery);
}

WeakSummary weak_summary(const PathEnsemble& alpha, const DriverEnsemble& driver,
                         std::vector<double> radii) {
  if (alpha.scenarios() != driver.scenarios() || !(alpha.grid() == driver.grid())) {
    fail(Errc::shape_mismatch, "ensemble and driver differ in grid or scenario count");
  }
  WeakSummary summary;
  std::vector<double> column(alpha.scenarios());
  for (std::size_t k = 0; k < alpha.node_count(); ++k) {
    for (std::size_t i = 0; i < alpha.dim(); ++i) {
      for (std::size_t m = 0; m < alpha.scenarios(); ++m) column[m] = alpha.at(m, k, i);
      const auto mean = stats::mean_se(column);
      const auto var = stats::variance_se(column);
      summary.moments.push_back({k, i, mean.mean, mean.std_error, var.variance, var.std_error});
    }
  }
  std::vector<double> sups(alpha.scenarios());
  for (std::size_t m = 0; m < alpha.scenarios(); ++m) {
    double worst = 0.0;
    for (double v : alpha.scenario(m)) worst = std::max(worst, std::abs(v));
    sups[m] = worst;
  }
  for (double r : radii) {
    const auto hits = std::count_if(sups.begin(), sups.end(), [&](double s) { return s > r; });
    summary.exceedance.emplace_back(r, static_cast<double>(hits) / static_cast<double>(sups.size()));
  }
  return summary;
}

void write_csv(std::ostream& out, const NarrowTable& table) {
  out << "functional,n,estimate,se,diff\n";
  for (const auto& r : table.rows) {
    out << r.functional << ',' << r.n << ',' << format_double(r.estimate) << ','
        << format_double(r.std_error) << ',' << format_double(r.diff) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const WeakSummary& summary, const TimeGrid& grid) {
  out << "node_index,time,coord,mean,mean_se,variance,variance_se\n";
  for (const auto& row : summary.moments) {
    out << row.node << ',' << format_double(grid.node(row.node)) << ',' << row.coord << ','
        << format_double(row.mean) << ',' << format_double(row.mean_se) << ','
        << format_double(row.variance) << ',' << format_double(row.variance_se) << '\n';
  }
}

void write_exceedance_csv(std::ostream& out, const WeakSummary& summary) {
  out << "radius,probability\n";
  for (const auto& [r, p] : summary.exceedance) out << format_double(r) << ',' << format_double(p) << '\n';
}

}  // namespace apfx
