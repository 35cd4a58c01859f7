#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>

#include "apfx/ensemble_io.hpp"
#include "apfx/error.hpp"
#include "apfx/fixpoint.hpp"
#include "apfx/parallel.hpp"
#include "apfx/problems.hpp"
#include "apfx/tightness.hpp"
#include "apfx/youngdiag.hpp"
#include "config.hpp"

namespace apfx::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string command;
  std::string config_path;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(Errc::io, "cannot write " + p.string());
  return out;
}

PathEnsemble x_init_for(const ResolvedProblem& r, const TimeGrid& grid, std::size_t scenarios) {
  return r.sde ? initial_guess(*r.sde, grid, scenarios) : PathEnsemble(grid, scenarios, r.dim);
}

int cmd_solve(const ExperimentConfig& c, const fs::path& dir, std::ostream& out) {
  const auto grid = grid_of(c);
  const auto problem = resolve_problem(c);
  const auto driver = sample_driver(grid, c.monte_carlo.M, c.monte_carlo.d_w, c.monte_carlo.seed);
  const auto result = run_scheme(problem.op, scheme_of(c), driver, x_init_for(problem, grid, c.monte_carlo.M));
  const auto summary = weak_summary(result.alphas.back(), driver);

  fs::create_directories(dir);
  auto levels = open_out(dir / "levels.csv");
  write_levels_csv(levels, result);
  auto pairwise = open_out(dir / "pairwise.csv");
  write_pairwise_csv(pairwise, result);
  auto summary_csv = open_out(dir / "summary.csv");
  write_summary_csv(summary_csv, summary, grid);
  auto exceedance = open_out(dir / "exceedance.csv");
  write_exceedance_csv(exceedance, summary);
  write_binary(dir / "solution.bin", result.alphas.back());

  const auto& last = result.level_stats.back();
  out << "solve: " << result.alphas.size() << " levels, final n=" << last.n
      << " median residual " << format_double(last.median_residual) << '\n';
  if (!result.converged()) {
    out << "solve: level solver hit max_iter without reaching tol\n";
    return numerical_flag;
  }
  return ok;
}

int cmd_scheme(const ExperimentConfig& c, const fs::path& dir, std::ostream& out) {
  const auto grid = grid_of(c);
  const auto problem = resolve_problem(c);
  const auto driver = sample_driver(grid, c.monte_carlo.M, c.monte_carlo.d_w, c.monte_carlo.seed);
  const auto result = run_scheme(problem.op, scheme_of(c), driver, x_init_for(problem, grid, c.monte_carlo.M));
  write_scheme_result(dir, result);

  const auto battery = test_battery(grid, problem.dim, c.monte_carlo.d_w, c.diagnostics.battery_count,
                                    c.diagnostics.battery_seed);
  const auto table = narrow_stats(result, driver, battery);
  auto narrow = open_out(dir / "narrow.csv");
  write_csv(narrow, table);

  if (result.alphas.size() >= 2) {
    const auto report = strong_limit_probe(result);
    auto strong = open_out(dir / "strong_limit.csv");
    strong << "n,n_next,successive,to_last\n";
    for (std::size_t i = 0; i < report.successive.size(); ++i) {
      strong << result.level_stats[i].n << ',' << result.level_stats[i + 1].n << ','
             << format_double(report.successive[i]) << ',' << format_double(report.to_last[i]) << '\n';
    }
    auto verdict = open_out(dir / "strong_limit_verdict.csv");
    verdict << "violations,verdict\n" << report.violations << ',' << to_string(report.verdict) << '\n';
    out << "scheme: strong-limit probe " << to_string(report.verdict) << '\n';
  }
  out << "scheme: " << format_double(table.settling_fraction())
      << " of battery functionals settle\n";
  if (!result.converged()) {
    out << "scheme: level solver hit max_iter without reaching tol\n";
    return numerical_flag;
  }
  return ok;
}

int cmd_check_op(const ExperimentConfig& c, const fs::path& dir, std::ostream& out) {
  const auto grid = grid_of(c);
  const auto problem = resolve_problem(c);
  const std::uint64_t seed = c.monte_carlo.seed;
  const std::size_t M = c.monte_carlo.M;
  const auto driver = sample_driver(grid, M, c.monte_carlo.d_w, seed);
  const auto x = random_input(grid, M, problem.dim, seed, 1);
  const auto y = random_input(grid, M, problem.dim, seed, 2);

  fs::create_directories(dir);
  bool all_ok = true;

  const auto loc = locality_check(problem.op, x, y, driver, c.diagnostics.check.locality_trials, seed);
  all_ok = all_ok && loc.ok();
  auto loc_csv = open_out(dir / "locality.csv");
  loc_csv << "trials,passed,failed,counterexample_trial,scenario,node,coord,inside_subset\n"
          << loc.trials << ',' << loc.passed << ',' << loc.failed << ',';
  if (const auto& ce = loc.first_counterexample) {
    loc_csv << ce->trial << ',' << ce->where.scenario << ',' << ce->where.node << ',' << ce->where.coord
            << ',' << (ce->inside_subset ? 1 : 0) << '\n';
  } else {
    loc_csv << ",,,,\n";
  }

  const ProblemDims dims{grid, M, problem.dim, c.monte_carlo.d_w};
  auto adapt_csv = open_out(dir / "adaptedness.csv");
  adapt_csv << "split,trials,passed,failed,failure_trial,scenario,node,coord\n";
  std::size_t failed_splits = 0;
  for (std::size_t split = 0; split <= grid.steps(); ++split) {
    const auto rep = adaptedness_check(problem.op, dims, split, c.diagnostics.check.adaptedness_trials, seed);
    if (!rep.ok()) ++failed_splits;
    adapt_csv << split << ',' << rep.trials << ',' << rep.passed << ',' << rep.failed << ',';
    if (const auto& f = rep.first_failure) {
      adapt_csv << f->first << ',' << f->second.scenario << ',' << f->second.node << ','
                << f->second.coord << '\n';
    } else {
      adapt_csv << ",,,\n";
    }
  }
  all_ok = all_ok && failed_splits == 0;

  out << "check-op: locality " << (loc.ok() ? "passed" : "FAILED") << " (" << loc.passed << '/'
      << loc.trials << "), adaptedness failed at " << failed_splits << " of " << grid.node_count()
      << " splits\n";
  return all_ok ? ok : property_violation;
}

// Bounded input family, every member with sup norm <= bound.
std::vector<std::pair<std::string, PathEnsemble>> bounded_inputs(const TimeGrid& grid, std::size_t dim,
                                                                 const DriverEnsemble& driver,
                                                                 double bound) {
  const std::size_t M = driver.scenarios();
  std::vector<std::pair<std::string, PathEnsemble>> family;
  auto fill = [&](const std::string& name, auto value) {
    PathEnsemble u(grid, M, dim);
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t k = 0; k < grid.node_count(); ++k) {
        const double v = value(m, k);
        for (std::size_t i = 0; i < dim; ++i) u.at(m, k, i) = v;
      }
    }
    family.emplace_back(name, std::move(u));
  };
  fill("constant", [&](std::size_t, std::size_t) { return bound; });
  fill("sin_w", [&](std::size_t m, std::size_t k) { return bound * std::sin(driver.path(m, k, 0)); });
  fill("clamped_w", [&](std::size_t m, std::size_t k) {
    return std::clamp(driver.path(m, k, 0), -bound, bound);
  });
  fill("cos_t", [&](std::size_t, std::size_t k) {
    return bound * std::cos(2.0 * std::numbers::pi * (grid.node(k) - grid.start()) / (grid.end() - grid.start()));
  });
  return family;
}

int cmd_tightness(const ExperimentConfig& c, const fs::path& dir, std::ostream& out) {
  const auto grid = grid_of(c);
  const auto problem = resolve_problem(c);
  const auto& spec = c.diagnostics.tightness;
  const std::size_t M = c.monte_carlo.M;
  const auto driver = sample_driver(grid, M, c.monte_carlo.d_w, c.monte_carlo.seed);
  const auto reference_driver = sample_driver(grid, M, c.monte_carlo.d_w, spec.reference_seed);
  const auto inputs = bounded_inputs(grid, problem.dim, driver, spec.input_bound);
  const auto reference_inputs = bounded_inputs(grid, problem.dim, reference_driver, spec.input_bound);

  fs::create_directories(dir);
  std::vector<PathEnsemble> outputs;
  CompactSpec compact;
  bool any_degenerate = false;
  auto fits = open_out(dir / "kolmogorov_fit.csv");
  fits << "input,exponent,constant,r2,degenerate\n";
  for (std::size_t e = 0; e < inputs.size(); ++e) {
    const auto& [name, u] = inputs[e];
    PathEnsemble y = apply(problem.op, u, driver);

    auto modulus = open_out(dir / ("modulus_" + name + ".csv"));
    write_csv(modulus, modulus_report(y, spec.deltas));
    const auto fit = kolmogorov_estimate(y, spec.pair_count, c.monte_carlo.seed);
    auto pairs = open_out(dir / ("kolmogorov_" + name + ".csv"));
    write_csv(pairs, fit);
    fits << name << ',' << format_double(fit.fitted_exponent) << ',' << format_double(fit.fitted_constant)
         << ',' << format_double(fit.r2) << ',' << (fit.degenerate ? 1 : 0) << '\n';
    any_degenerate = any_degenerate || fit.degenerate;

    // The compact must hold every member, so take the loosest calibrated constraint.
    const auto ref = apply(problem.op, reference_inputs[e].second, reference_driver);
    const auto member = calibrate_compact(ref, spec.deltas, spec.quantile);
    if (e == 0) {
      compact = member;
    } else {
      compact.sup_bound = std::max(compact.sup_bound, member.sup_bound);
      for (std::size_t d = 0; d < compact.modulus.size(); ++d) {
        compact.modulus[d].second = std::max(compact.modulus[d].second, member.modulus[d].second);
      }
    }
    outputs.push_back(std::move(y));
  }

  const auto report = tight_set_probe(outputs, compact, spec.sigma);
  auto tight = open_out(dir / "tightness.csv");
  write_csv(tight, report);

  const auto box = CompactBox::uniform(grid, problem.dim, -spec.input_bound, spec.input_bound);
  const auto rows = uniform_continuity_probe(problem.op, box, spec.rho, spec.continuity_trials, driver,
                                             c.monte_carlo.seed);
  auto continuity = open_out(dir / "continuity.csv");
  write_csv(continuity, rows);

  out << "tightness: exceedance " << format_double(report.exceedance) << " at sigma "
      << format_double(report.sigma) << (any_degenerate ? ", degenerate Kolmogorov fit recorded" : "")
      << '\n';
  return ok;
}

int cmd_localize(const ExperimentConfig& c, const fs::path& dir, std::ostream& out) {
  const auto grid = grid_of(c);
  const auto problem = resolve_problem(c);
  if (!problem.sde) fail(Errc::invalid_argument, "localize needs a preset problem");
  const auto driver = sample_driver(grid, c.monte_carlo.M, c.monte_carlo.d_w, c.monte_carlo.seed);
  const auto sol = solve_localized(*problem.sde, c.localize.radii, driver, scheme_of(c));

  fs::create_directories(dir);
  write_binary(dir / "localized.bin", sol.path);
  auto stopping = open_out(dir / "stopping.csv");
  stopping << "scenario,stopping_node,exit_flag";
  for (std::size_t v = 0; v < c.localize.radii.size(); ++v) stopping << ",tau_" << v;
  stopping << '\n';
  for (std::size_t m = 0; m < driver.scenarios(); ++m) {
    stopping << m << ',' << sol.stopping_nodes[m] << ',' << (sol.exit_flags[m] ? 1 : 0);
    for (const auto& taus : sol.stopping_by_radius) stopping << ',' << taus[m];
    stopping << '\n';
  }
  auto ladder = open_out(dir / "radii.csv");
  ladder << "radius,exits\n";
  for (std::size_t v = 0; v < c.localize.radii.size(); ++v) {
    const auto& taus = sol.stopping_by_radius[v];
    const auto exits = std::count_if(taus.begin(), taus.end(), [&](std::size_t t) { return t < grid.steps(); });
    ladder << format_double(c.localize.radii[v]) << ',' << exits << '\n';
  }

  out << "localize: " << c.localize.radii.size() << " radii, "
      << (sol.consistent ? "consistent" : "INCONSISTENT") << '\n';
  if (!sol.consistent) return property_violation;
  if (!sol.converged) return numerical_flag;
  return ok;
}

int dispatch(const Options& o, std::ostream& out) {
  ExperimentConfig c = load_config(o.config_path);
  if (o.seed) c.monte_carlo.seed = *o.seed;
  if (!o.output.empty()) c.output_dir = o.output;
  validate(c);
  const fs::path dir = c.output_dir;
  if (o.command == "solve") return cmd_solve(c, dir, out);
  if (o.command == "scheme") return cmd_scheme(c, dir, out);
  if (o.command == "check-op") return cmd_check_op(c, dir, out);
  if (o.command == "tightness") return cmd_tightness(c, dir, out);
  return cmd_localize(c, dir, out);
}

class ThreadScope {
 public:
  explicit ThreadScope(std::size_t n) : saved_(thread_count()) { set_thread_count(n); }
  ~ThreadScope() { set_thread_count(saved_); }
  ThreadScope(const ThreadScope&) = delete;
  ThreadScope& operator=(const ThreadScope&) = delete;

 private:
  std::size_t saved_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Approximate fixed points of local operators on adapted path ensembles", "apfx"};
  app.require_subcommand(1);
  Options o;
  const std::pair<const char*, const char*> commands[] = {
      {"solve", "run the scheme and summarize the finest level"},
      {"scheme", "run the scheme and write every level with convergence tables"},
      {"check-op", "locality and adaptedness checks for the configured operator"},
      {"tightness", "modulus, Kolmogorov and tight-set diagnostics"},
      {"localize", "solve over a ladder of localization radii"},
  };
  for (const auto& [name, about] : commands) {
    auto* sub = app.add_subcommand(name, about);
    sub->add_option("--config", o.config_path, "experiment config (JSON)")->required();
    sub->add_option("--output", o.output, "output directory (overrides output_dir)");
    sub->add_option("--seed", o.seed, "Monte-Carlo seed (overrides monte_carlo.seed)");
    sub->add_option("--threads", o.threads, "worker threads; results do not depend on it")
        ->check(CLI::PositiveNumber);
    sub->callback([&o, sub] { o.command = sub->get_name(); });
  }
  std::vector<const char*> argv{"apfx"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? ok : config_error;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return config_error;
  }

  ThreadScope threads(o.threads);
  try {
    return dispatch(o, out);
  } catch (const Error& e) {
    err << "apfx " << o.command << ": " << e.what() << '\n';
    return e.code() == Errc::operator_evaluation ? numerical_flag : config_error;
  } catch (const std::exception& e) {
    err << "apfx " << o.command << ": " << e.what() << '\n';
    return config_error;
  }
}

}  // namespace apfx::cli
