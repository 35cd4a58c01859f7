#include "apfx/fixpoint.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "apfx/ensemble_io.hpp"
#include "apfx/error.hpp"
#include "apfx/parallel.hpp"
#include "apfx/stats.hpp"
#include "apfx/tightness.hpp"

namespace apfx {
namespace {

std::vector<double> sup_residuals(const PathEnsemble& a, const PathEnsemble& b) {
  std::vector<double> r(a.scenarios());
  parallel_for(a.scenarios(), [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t m = begin; m < end; ++m) {
      r[m] = path_distance(a.scenario(m), b.scenario(m), a.dim(), a.grid(), Norm::sup);
    }
  });
  return r;
}

std::size_t entries_outside(const PathEnsemble& x, const CompactBox& box) {
  std::size_t count = 0;
  for (std::size_t m = 0; m < x.scenarios(); ++m) {
    for (std::size_t k = 0; k < x.node_count(); ++k) {
      for (std::size_t i = 0; i < x.dim(); ++i) {
        const double v = x.at(m, k, i);
        if (v < box.lo(k, i) || v > box.hi(k, i)) ++count;
      }
    }
  }
  return count;
}

const char* method_name(SolveMethod m) {
  return m == SolveMethod::forward_substitution ? "forward_substitution" : "picard";
}

}  // namespace

void SchemeConfig::validate() const {
  if (levels.empty()) fail(Errc::invalid_argument, "scheme needs at least one projection level");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i].n == 0) fail(Errc::invalid_argument, "projection level n must be >= 1");
    if (i > 0 && levels[i].n <= levels[i - 1].n) {
      fail(Errc::invalid_argument, "projection levels must be strictly increasing in n");
    }
  }
  if (!(damping > 0.0 && damping <= 1.0)) fail(Errc::invalid_argument, "damping must lie in (0, 1]");
  if (!(tol > 0.0)) fail(Errc::invalid_argument, "tolerance must be positive");
  if (max_iter == 0) fail(Errc::invalid_argument, "max_iter must be >= 1");
  if (const auto* growth = std::get_if<BoxGrowth>(&box_rule)) {
    if (!(growth->base_radius > 0.0)) fail(Errc::invalid_argument, "box growth radius must be positive");
  }
}

CompactBox level_box(const BoxRule& rule, const TimeGrid& grid, std::size_t dim, std::size_t n) {
  if (const auto* fixed = std::get_if<CompactBox>(&rule)) {
    if (fixed->node_count() != grid.node_count() || fixed->dim() != dim) {
      fail(Errc::shape_mismatch, "fixed box does not match the problem shape");
    }
    return *fixed;
  }
  const auto& growth = std::get<BoxGrowth>(rule);
  std::vector<double> center = growth.center.empty() ? std::vector<double>(dim, 0.0) : growth.center;
  if (center.size() != dim) fail(Errc::dimension_mismatch, "box center has the wrong dimension");
  return CompactBox::around(grid, center, growth.base_radius * static_cast<double>(n));
}

OperatorDescriptor build_hn(const OperatorDescriptor& h, const ProjectionLevel& level,
                            const CompactBox& box) {
  auto hn = compose({h, interp_operator(level), clamp_operator(box)});
  hn.label = "h_" + std::to_string(level.n);
  return hn;
}

LevelSolution solve_level(const OperatorDescriptor& h_n, const PathEnsemble& x0,
                          const DriverEnsemble& driver, const SchemeConfig& config) {
  const std::size_t scenarios = x0.scenarios();
  if (effective_causality(h_n, x0.grid()) == Causality::strictly_causal) {
    PathEnsemble alpha = forward_substitute(h_n, x0, driver);
    auto residuals = sup_residuals(apply(h_n, alpha, driver), alpha);
    return {std::move(alpha), std::vector<std::size_t>(scenarios, 1), std::move(residuals),
            SolveMethod::forward_substitution, true};
  }

  const double lambda = config.damping;
  if (!(lambda > 0.0 && lambda <= 1.0)) fail(Errc::invalid_argument, "damping must lie in (0, 1]");
  PathEnsemble alpha = x0;
  std::vector<std::size_t> iterations(scenarios, 0);
  std::vector<double> residuals(scenarios, 0.0);
  std::vector<bool> active(scenarios, true);
  std::size_t remaining = scenarios;
  while (remaining > 0) {
    const PathEnsemble y = apply(h_n, alpha, driver);
    const auto r = sup_residuals(y, alpha);
    for (std::size_t m = 0; m < scenarios; ++m) {
      if (!active[m]) continue;
      residuals[m] = r[m];
      if (r[m] <= config.tol || iterations[m] >= config.max_iter) {
        active[m] = false;
        --remaining;
        continue;
      }
      auto a = alpha.scenario(m);
      const auto b = y.scenario(m);
      for (std::size_t e = 0; e < a.size(); ++e) a[e] = (1.0 - lambda) * a[e] + lambda * b[e];
      ++iterations[m];
    }
  }
  const bool converged =
      std::all_of(residuals.begin(), residuals.end(), [&](double v) { return v <= config.tol; });
  return {std::move(alpha), std::move(iterations), std::move(residuals), SolveMethod::picard,
          converged};
}

bool SchemeResult::converged() const noexcept {
  return std::all_of(level_stats.begin(), level_stats.end(),
                     [](const LevelStats& s) { return s.converged; });
}

SchemeResult run_scheme(const OperatorDescriptor& h, const SchemeConfig& config,
                        const DriverEnsemble& driver, const PathEnsemble& x_init) {
  config.validate();
  const auto& grid = x_init.grid();
  for (const auto& level : config.levels) (void)level.stride(grid);
  if (!(grid == driver.grid()) || x_init.scenarios() != driver.scenarios()) {
    fail(Errc::shape_mismatch, "initial guess and driver differ in grid or scenario count");
  }
  const std::size_t dim = x_init.dim();

  SchemeResult result;
  for (const auto& level : config.levels) {
    const CompactBox box = level_box(config.box_rule, grid, dim, level.n);
    const OperatorDescriptor hn = build_hn(h, level, box);
    // Starting inside the convex box keeps damped iterates inside it.
    LevelSolution sol = solve_level(hn, clamp_box(x_init, box), driver, config);
    // Rounding in the damped average can leave an entry one ulp outside.
    PathEnsemble alpha = clamp_box(sol.alpha, box);

    const PathEnsemble h_alpha = apply(h, alpha, driver);
    auto residuals = sup_residuals(h_alpha, alpha);

    LevelStats stats;
    stats.n = level.n;
    stats.median_residual = stats::median(residuals);
    const double threshold = 1.0 / static_cast<double>(level.n);
    stats.frac_ge_1_over_n =
        static_cast<double>(std::count_if(residuals.begin(), residuals.end(),
                                          [&](double r) { return r >= threshold; })) /
        static_cast<double>(residuals.size());
    stats.bound_2_over_n = 2.0 / static_cast<double>(level.n);
    stats.max_iterations = *std::max_element(sol.iterations.begin(), sol.iterations.end());
    stats.converged = sol.converged;
    stats.clamp_activations = entries_outside(volterra_interp(h_alpha, level), box);
    stats.method = sol.method;

    result.alphas.push_back(std::move(alpha));
    result.residuals.push_back(std::move(residuals));
    result.level_stats.push_back(stats);
    result.iterations_used.push_back(std::move(sol.iterations));
  }

  const std::size_t levels = result.alphas.size();
  result.pairwise.assign(levels, std::vector<MetricEstimate>(levels));
  for (std::size_t i = 0; i < levels; ++i) {
    result.pairwise[i][i] = {0.0, 0.0, driver.scenarios()};
    for (std::size_t j = i + 1; j < levels; ++j) {
      result.pairwise[i][j] = prob_metric(result.alphas[i], result.alphas[j], Norm::sup);
      result.pairwise[j][i] = result.pairwise[i][j];
    }
  }
  return result;
}

const char* to_string(LimitVerdict v) noexcept {
  return v == LimitVerdict::strong_limit_candidate ? "strong-limit-candidate" : "inconclusive";
}

StrongLimitReport strong_limit_probe(const SchemeResult& result) {
  const std::size_t levels = result.alphas.size();
  if (levels < 2) fail(Errc::invalid_argument, "strong_limit_probe needs at least two levels");
  StrongLimitReport report;
  for (std::size_t i = 0; i + 1 < levels; ++i) {
    report.successive.push_back(result.pairwise[i][i + 1].value);
    report.to_last.push_back(result.pairwise[i][levels - 1].value);
  }
  report.violations = stats::decrease_violations(report.successive, false);
  const bool all_zero = std::all_of(report.successive.begin(), report.successive.end(),
                                    [](double d) { return d == 0.0; });
  const bool shrinking = report.successive.size() >= 2 && report.violations <= 1 &&
                         report.successive.back() < report.successive.front();
  report.verdict = (all_zero || shrinking) ? LimitVerdict::strong_limit_candidate
                                           : LimitVerdict::inconclusive;
  return report;
}

void write_levels_csv(std::ostream& out, const SchemeResult& result) {
  out << "n,median_residual,frac_ge_1_over_n,bound_2_over_n,iterations,converged,clamp_activations,method\n";
  for (const auto& s : result.level_stats) {
    out << s.n << ',' << format_double(s.median_residual) << ',' << format_double(s.frac_ge_1_over_n)
        << ',' << format_double(s.bound_2_over_n) << ',' << s.max_iterations << ','
        << (s.converged ? 1 : 0) << ',' << s.clamp_activations << ',' << method_name(s.method)
        << '\n';
  }
}

void write_pairwise_csv(std::ostream& out, const SchemeResult& result) {
  out << "n_i,n_j,distance,std_error\n";
  for (std::size_t i = 0; i < result.pairwise.size(); ++i) {
    for (std::size_t j = 0; j < result.pairwise.size(); ++j) {
      out << result.level_stats[i].n << ',' << result.level_stats[j].n << ','
          << format_double(result.pairwise[i][j].value) << ','
          << format_double(result.pairwise[i][j].std_error) << '\n';
    }
  }
}

void write_scheme_result(const std::filesystem::path& dir, const SchemeResult& result) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < result.alphas.size(); ++i) {
    write_binary(dir / ("level_" + std::to_string(result.level_stats[i].n) + ".bin"), result.alphas[i]);
  }
  std::ofstream levels(dir / "levels.csv", std::ios::binary);
  write_levels_csv(levels, result);
  std::ofstream pairwise(dir / "pairwise.csv", std::ios::binary);
  write_pairwise_csv(pairwise, result);
  if (!levels || !pairwise) fail(Errc::io, "failed writing scheme result to " + dir.string());
}

}  // namespace apfx
