#include "apfx/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "apfx/error.hpp"

namespace apfx {
namespace {

double take(const PresetParams& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::string& preset_name, const PresetParams& params,
                    std::initializer_list<const char*> known) {
  for (const auto& [key, value] : params) {
    (void)value;
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      fail(Errc::invalid_argument, "preset " + preset_name + " has no parameter '" + key + "'");
    }
  }
}

double euclid_dist(std::span<const double> x, std::span<const double> c) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - c[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

CoefficientFn localized(const CoefficientFn& f, const SDEProblem& p, double radius) {
  CoefficientFn g = f;
  g.name = f.name + "@ball(" + std::to_string(radius) + ")";
  const auto center_rule = p.x0_rule;
  const auto x0 = p.x0;
  g.rule = [inner = f.rule, center_rule, x0, radius](std::size_t k, double t,
                                                     std::span<const double> x,
                                                     const DriverPrefix& w, std::span<double> out) {
    std::vector<double> center = x0;
    if (center_rule) {
      center.assign(x.size(), 0.0);
      center_rule(w.scenario(), center);
    }
    const double dist = euclid_dist(x, center);
    if (dist <= radius) {
      inner(k, t, x, w, out);
      return;
    }
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = center[i] + (x[i] - center[i]) * (radius / dist);
    inner(k, t, y, w, out);
  };
  return g;
}

std::vector<double> scenario_x0(const SDEProblem& p, std::size_t m) {
  if (!p.x0_rule) return p.x0;
  std::vector<double> c(p.dim, 0.0);
  p.x0_rule(m, c);
  return c;
}

}  // namespace

void SDEProblem::validate() const {
  if (dim == 0) fail(Errc::dimension_mismatch, "problem dimension must be >= 1");
  if (driver_dim == 0) fail(Errc::dimension_mismatch, "driver dimension must be >= 1");
  if (!x0_rule && x0.size() != dim) {
    fail(Errc::dimension_mismatch, "x0 has " + std::to_string(x0.size()) + " entries, expected " +
                                       std::to_string(dim));
  }
  if (!diffusions.empty() && diffusions.size() != driver_dim) {
    fail(Errc::dimension_mismatch, "need one diffusion coefficient per driver column");
  }
  if (!drift.rule) fail(Errc::dimension_mismatch, "problem has no drift coefficient");
  if (drift.output_dim(dim) != dim) fail(Errc::dimension_mismatch, "drift output dimension differs from d");
  for (const auto& f : diffusions) {
    if (!f.rule || f.output_dim(dim) != dim) {
      fail(Errc::dimension_mismatch, "diffusion output dimension differs from d");
    }
  }
}

OperatorDescriptor as_operator(const SDEProblem& p) {
  p.validate();
  std::vector<OperatorDescriptor> terms;
  terms.push_back(p.x0_rule ? constant_operator(p.dim, p.x0_rule) : constant_operator(p.x0));
  terms.push_back(compose({superposition(p.drift), lebesgue_integral()}));
  for (std::size_t j = 0; j < p.diffusions.size(); ++j) {
    terms.push_back(compose({superposition(p.diffusions[j]), ito_integral(j)}));
  }
  auto op = sum(std::move(terms));
  op.label = p.name;
  return op;
}

PathEnsemble initial_guess(const SDEProblem& p, const TimeGrid& grid, std::size_t scenarios) {
  p.validate();
  PathEnsemble x(grid, scenarios, p.dim);
  for (std::size_t m = 0; m < scenarios; ++m) {
    const auto c = scenario_x0(p, m);
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
      for (std::size_t i = 0; i < p.dim; ++i) x.at(m, k, i) = c[i];
    }
  }
  return x;
}

SDEProblem preset(const std::string& name, const PresetParams& params) {
  SDEProblem p;
  p.name = name;
  if (name == "gbm") {
    reject_unknown(name, params, {"mu", "sigma", "x0"});
    const double mu = take(params, "mu", 0.05), sigma = take(params, "sigma", 0.2);
    p.x0 = {take(params, "x0", 1.0)};
    p.drift = CoefficientFn::elementwise(
        "mu*x", [mu](std::size_t, double, double x, std::size_t, const DriverPrefix&) { return mu * x; },
        mu == 0.0 ? std::optional<double>(0.0) : std::nullopt, 1.0);
    p.diffusions = {CoefficientFn::elementwise(
        "sigma*x",
        [sigma](std::size_t, double, double x, std::size_t, const DriverPrefix&) { return sigma * x; },
        sigma == 0.0 ? std::optional<double>(0.0) : std::nullopt, 1.0)};
  } else if (name == "ou") {
    reject_unknown(name, params, {"theta", "sigma", "x0"});
    const double theta = take(params, "theta", 1.0), sigma = take(params, "sigma", 0.5);
    p.x0 = {take(params, "x0", 1.0)};
    p.drift = CoefficientFn::elementwise(
        "-theta*x",
        [theta](std::size_t, double, double x, std::size_t, const DriverPrefix&) { return -theta * x; },
        theta == 0.0 ? std::optional<double>(0.0) : std::nullopt, 1.0);
    p.diffusions = {coefficients::constant(sigma)};
  } else if (name == "bounded_tanh") {
    reject_unknown(name, params, {"c", "x0"});
    const double c = take(params, "c", 1.0);
    p.x0 = {take(params, "x0", 0.0)};
    p.drift = coefficients::scaled_tanh(c);
    p.diffusions = {coefficients::scaled_tanh(c)};
  } else if (name == "driver_coupled") {
    reject_unknown(name, params, {"x0"});
    p.x0 = {take(params, "x0", 1.0)};
    p.drift = CoefficientFn::elementwise(
        "clip(sin(W)*x)",
        [](std::size_t, double, double x, std::size_t, const DriverPrefix& w) {
          return std::clamp(std::sin(w.current(0)) * x, -1.0, 1.0);
        },
        1.0, 0.0);
    p.diffusions = {coefficients::zero()};
  } else {
    fail(Errc::unknown_preset, "unknown preset '" + name + "'");
  }
  p.validate();
  return p;
}

std::vector<std::string> preset_names() { return {"gbm", "ou", "bounded_tanh", "driver_coupled"}; }

SDEProblem localize(const SDEProblem& p, double radius) {
  if (!(radius > 0.0)) fail(Errc::invalid_argument, "localization radius must be positive");
  p.validate();
  SDEProblem q = p;
  q.name = p.name + "_r" + std::to_string(radius);
  q.drift = localized(p.drift, p, radius);
  for (auto& f : q.diffusions) f = localized(f, p, radius);
  return q;
}

LocalizedSolution solve_localized(const SDEProblem& p, const std::vector<double>& radii,
                                  const DriverEnsemble& driver, const SchemeConfig& config) {
  if (radii.empty()) fail(Errc::invalid_argument, "solve_localized needs at least one radius");
  for (std::size_t v = 0; v < radii.size(); ++v) {
    if (!(radii[v] > 0.0) || (v > 0 && radii[v] <= radii[v - 1])) {
      fail(Errc::invalid_argument, "radii must be positive and strictly increasing");
    }
  }
  config.validate();
  p.validate();
  if (driver.dim() != p.driver_dim) fail(Errc::dimension_mismatch, "driver dimension differs from d_w");
  const auto& grid = driver.grid();
  const std::size_t scenarios = driver.scenarios();
  const ProjectionLevel& level = config.levels.back();
  (void)level.stride(grid);
  const CompactBox box = level_box(config.box_rule, grid, p.dim, level.n);
  const PathEnsemble start = clamp_box(initial_guess(p, grid, scenarios), box);

  LocalizedSolution out{PathEnsemble(grid, scenarios, p.dim), {}, {}, {}, {}, true, true};
  for (double r : radii) {
    const auto hn = build_hn(as_operator(localize(p, r)), level, box);
    auto sol = solve_level(hn, start, driver, config);
    out.converged = out.converged && sol.converged;

    std::vector<std::size_t> tau(scenarios, grid.steps());
    for (std::size_t m = 0; m < scenarios; ++m) {
      const auto c = scenario_x0(p, m);
      for (std::size_t k = 0; k < grid.node_count(); ++k) {
        const auto xk = sol.alpha.scenario(m).subspan(k * p.dim, p.dim);
        if (euclid_dist(xk, c) > r) {
          tau[m] = k;
          break;
        }
      }
    }
    out.stopping_by_radius.push_back(std::move(tau));
    out.by_radius.push_back(std::move(sol.alpha));
  }

  for (std::size_t v = 1; v < radii.size(); ++v) {
    const auto& prev = out.by_radius[v - 1];
    const auto& cur = out.by_radius[v];
    for (std::size_t m = 0; m < scenarios; ++m) {
      const std::size_t len = (out.stopping_by_radius[v - 1][m] + 1) * p.dim;
      if (std::memcmp(prev.scenario(m).data(), cur.scenario(m).data(), len * sizeof(double)) != 0) {
        out.consistent = false;
      }
    }
  }

  out.path = out.by_radius.back();
  out.stopping_nodes = out.stopping_by_radius.back();
  const double r_max = radii.back();
  for (std::size_t m = 0; m < scenarios; ++m) {
    const auto c = scenario_x0(p, m);
    bool exited = false;
    for (std::size_t k = 0; k < grid.node_count() && !exited; ++k) {
      exited = euclid_dist(out.path.scenario(m).subspan(k * p.dim, p.dim), c) > r_max;
    }
    out.exit_flags.push_back(exited);
  }
  return out;
}

}  // namespace apfx
