#include "apfx/tightness.hpp"

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

std::size_t window_steps(const TimeGrid& grid, double delta) {
  if (!(delta >= grid.dt() * (1.0 - 1e-12))) {
    fail(Errc::invalid_argument, "modulus gap " + format_double(delta) +
                                     " is below the grid step " + format_double(grid.dt()));
  }
  return std::min(grid.steps(), static_cast<std::size_t>(std::floor(delta / grid.dt() + 1e-9)));
}

std::vector<double> scenario_moduli(const PathEnsemble& y, double delta) {
  std::vector<double> mods(y.scenarios());
  (void)window_steps(y.grid(), delta);
  parallel_for(y.scenarios(), [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t m = begin; m < end; ++m) {
      mods[m] = path_modulus(y.scenario(m), y.dim(), y.grid(), delta);
    }
  });
  return mods;
}

std::vector<double> scenario_sups(const PathEnsemble& y) {
  std::vector<double> sups(y.scenarios());
  for (std::size_t m = 0; m < y.scenarios(); ++m) sups[m] = path_sup(y.scenario(m));
  return sups;
}

}  // namespace

double path_modulus(std::span<const double> path, std::size_t dim, const TimeGrid& grid,
                    double delta) {
  const std::size_t w = window_steps(grid, delta);
  const std::size_t nodes = grid.node_count();
  double worst = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    const std::size_t reach = std::min(nodes - 1, k + w);
    for (std::size_t j = k + 1; j <= reach; ++j) {
      for (std::size_t i = 0; i < dim; ++i) {
        worst = std::max(worst, std::abs(path[j * dim + i] - path[k * dim + i]));
      }
    }
  }
  return worst;
}

double path_sup(std::span<const double> path) {
  double worst = 0.0;
  for (double v : path) worst = std::max(worst, std::abs(v));
  return worst;
}

std::vector<ModulusRow> modulus_report(const PathEnsemble& y, const std::vector<double>& deltas) {
  std::vector<ModulusRow> rows;
  for (double delta : deltas) {
    auto mods = scenario_moduli(y, delta);
    rows.push_back({delta, stats::median(mods), stats::quantile(mods, 0.95)});
  }
  return rows;
}

RegularityFit kolmogorov_estimate(const PathEnsemble& y, std::size_t pair_count,
                                  std::uint64_t seed) {
  if (pair_count < 2) fail(Errc::invalid_argument, "kolmogorov_estimate needs pair_count >= 2");
  const std::size_t nodes = y.node_count();
  const CounterRng rng(seed, Stream::pair_sampling);
  RegularityFit fit;
  std::vector<double> sq(y.scenarios());
  for (std::size_t p = 0; p < pair_count; ++p) {
    std::size_t s = 0, t = 0;
    for (std::uint32_t lane = 0; s == t; lane += 2) {
      s = static_cast<std::size_t>(rng.bits(p, 0, lane) % nodes);
      t = static_cast<std::size_t>(rng.bits(p, 0, lane + 1) % nodes);
    }
    if (s > t) std::swap(s, t);
    for (std::size_t m = 0; m < y.scenarios(); ++m) {
      double acc = 0.0;
      for (std::size_t i = 0; i < y.dim(); ++i) {
        const double d = y.at(m, t, i) - y.at(m, s, i);
        acc += d * d;
      }
      sq[m] = acc;
    }
    const auto est = stats::mean_se(sq);
    fit.pairs.push_back({s, t, y.grid().node(t) - y.grid().node(s), est.mean, est.std_error});
  }

  std::vector<double> lx, ly;
  for (const auto& pr : fit.pairs) {
    if (pr.estimate > 0.0) {
      lx.push_back(std::log(pr.gap));
      ly.push_back(std::log(pr.estimate));
    }
  }
  const bool distinct_gaps =
      lx.size() >= 2 && std::any_of(lx.begin(), lx.end(), [&](double v) { return v != lx.front(); });
  if (!distinct_gaps) {
    fit.degenerate = true;
    fit.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
    fit.fitted_constant = std::numeric_limits<double>::quiet_NaN();
    fit.r2 = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  const auto line = stats::least_squares(lx, ly);
  fit.fitted_exponent = line.slope;
  fit.fitted_constant = std::exp(line.intercept);
  fit.r2 = line.r2;
  return fit;
}

TightnessReport tight_set_probe(const std::vector<PathEnsemble>& ys, const CompactSpec& compact,
                                double sigma) {
  if (ys.empty()) fail(Errc::invalid_argument, "tight_set_probe needs at least one ensemble");
  TightnessReport report;
  report.sigma = sigma;
  report.compact = compact;
  for (const auto& y : ys) {
    std::vector<bool> outside(y.scenarios(), false);
    const auto sups = scenario_sups(y);
    for (std::size_t m = 0; m < y.scenarios(); ++m) {
      outside[m] = sups[m] > compact.sup_bound + sigma;
    }
    for (const auto& [delta, eta] : compact.modulus) {
      const auto mods = scenario_moduli(y, delta);
      for (std::size_t m = 0; m < y.scenarios(); ++m) {
        if (mods[m] > eta + sigma) outside[m] = true;
      }
    }
    const double frac = static_cast<double>(std::count(outside.begin(), outside.end(), true)) /
                        static_cast<double>(y.scenarios());
    report.per_ensemble.push_back(frac);
    report.exceedance = std::max(report.exceedance, frac);
  }
  return report;
}

CompactSpec calibrate_compact(const PathEnsemble& reference, const std::vector<double>& deltas,
                              double level) {
  CompactSpec spec;
  spec.sup_bound = stats::quantile(scenario_sups(reference), level);
  for (double delta : deltas) {
    spec.modulus.emplace_back(delta, stats::quantile(scenario_moduli(reference, delta), level));
  }
  return spec;
}

std::vector<ContinuityRow> uniform_continuity_probe(const OperatorDescriptor& op,
                                                    const CompactBox& box,
                                                    std::vector<double> rho_values,
                                                    std::size_t trials,
                                                    const DriverEnsemble& driver,
                                                    std::uint64_t seed) {
  for (double rho : rho_values) {
    if (!(rho > 0.0)) fail(Errc::invalid_argument, "rho values must be positive");
  }
  std::sort(rho_values.begin(), rho_values.end());
  const auto& grid = driver.grid();
  if (box.node_count() != grid.node_count()) fail(Errc::shape_mismatch, "box does not match the driver grid");
  const std::size_t scenarios = driver.scenarios();
  const std::size_t dim = box.dim();
  const CounterRng base_rng(seed, Stream::test_input);
  const CounterRng dir_rng(seed, Stream::perturbation);

  std::vector<ContinuityRow> rows;
  for (double rho : rho_values) rows.push_back({rho, 0.0});

  for (std::size_t trial = 0; trial < trials; ++trial) {
    PathEnsemble u(grid, scenarios, dim);
    PathEnsemble direction(grid, scenarios, dim);
    for (std::size_t m = 0; m < scenarios; ++m) {
      for (std::size_t k = 0; k < grid.node_count(); ++k) {
        for (std::size_t i = 0; i < dim; ++i) {
          const std::uint64_t e = (trial << 32) | (k * dim + i);
          const double lo = box.lo(k, i), hi = box.hi(k, i);
          u.at(m, k, i) = lo + base_rng.uniform(m, e) * (hi - lo);
          direction.at(m, k, i) = 2.0 * dir_rng.uniform(m, e) - 1.0;
        }
      }
    }
    const PathEnsemble hu = apply(op, u, driver);
    for (auto& row : rows) {
      PathEnsemble v = u;
      auto vv = v.values();
      const auto dv = direction.values();
      for (std::size_t e = 0; e < vv.size(); ++e) vv[e] += row.rho * dv[e];
      v = clamp_box(v, box);
      const PathEnsemble hv = apply(op, v, driver);
      row.max_distance = std::max(row.max_distance, prob_metric(hu, hv, Norm::sup).value);
    }
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<ModulusRow>& rows) {
  out << "delta,median,q95\n";
  for (const auto& r : rows) {
    out << format_double(r.delta) << ',' << format_double(r.median) << ',' << format_double(r.q95)
        << '\n';
  }
}

void write_fit_csv(std::ostream& out, const RegularityFit& fit) {
  out << "exponent,constant,r2,degenerate\n"
      << format_double(fit.fitted_exponent) << ',' << format_double(fit.fitted_constant) << ','
      << format_double(fit.r2) << ',' << (fit.degenerate ? 1 : 0) << '\n';
}

void write_csv(std::ostream& out, const RegularityFit& fit) {
  out << "s,t,gap,estimate,se\n";
  for (const auto& p : fit.pairs) {
    out << p.s << ',' << p.t << ',' << format_double(p.gap) << ',' << format_double(p.estimate)
        << ',' << format_double(p.std_error) << '\n';
  }
}

void write_csv(std::ostream& out, const TightnessReport& report) {
  out << "ensemble,exceedance,sigma,sup_bound\n";
  for (std::size_t e = 0; e < report.per_ensemble.size(); ++e) {
    out << e << ',' << format_double(report.per_ensemble[e]) << ',' << format_double(report.sigma)
        << ',' << format_double(report.compact.sup_bound) << '\n';
  }
  out << "max," << format_double(report.exceedance) << ',' << format_double(report.sigma) << ','
      << format_double(report.compact.sup_bound) << '\n';
}

void write_csv(std::ostream& out, const std::vector<ContinuityRow>& rows) {
  out << "rho,max_distance\n";
  for (const auto& r : rows) out << format_double(r.rho) << ',' << format_double(r.max_distance) << '\n';
}

}  // namespace apfx
