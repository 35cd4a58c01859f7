#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>

#include "apfx/error.hpp"
#include "apfx/projective.hpp"

namespace apfx::cli {
namespace {

using nlohmann::json;

void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) fail(Errc::invalid_argument, where + " must be an object");
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  expect_object(j, where);
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      fail(Errc::invalid_argument, "unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw std::invalid_argument("expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw std::invalid_argument("expected a string");
    }
    out = v.get<T>();
  } catch (const std::exception& e) {
    fail(Errc::invalid_argument, where + "." + key + ": " + e.what());
  }
}

CoefficientFn build_coefficient(const json& spec) {
  if (spec.is_string()) return build_coefficient(json{{"name", spec}});
  expect_object(spec, "coefficient");
  if (!spec.contains("name") || !spec.at("name").is_string()) {
    fail(Errc::invalid_argument, "coefficient needs a string 'name'");
  }
  const std::string name = spec.at("name").get<std::string>();
  const std::string where = "coefficient " + name;
  double c = 1.0, slope = 1.0, offset = 0.0;
  if (name == "constant" || name == "tanh") {
    only_keys(spec, where, {"name", "c"});
    read(spec, "c", c, where);
    return name == "constant" ? coefficients::constant(c) : coefficients::scaled_tanh(c);
  }
  if (name == "linear") {
    only_keys(spec, where, {"name", "slope", "offset"});
    read(spec, "slope", slope, where);
    read(spec, "offset", offset, where);
    return coefficients::linear(slope, offset);
  }
  only_keys(spec, where, {"name"});
  if (name == "identity") return coefficients::identity();
  if (name == "zero") return coefficients::zero();
  if (name == "square") return coefficients::square();
  if (name == "sine") return coefficients::sine();
  if (name == "time") return coefficients::time();
  if (name == "driver_value") return coefficients::driver_value();
  if (name == "driver_sine") return coefficients::driver_sine();
  fail(Errc::invalid_argument, "unknown coefficient '" + name + "'");
}

PresetParams read_params(const json& j, const std::string& where) {
  PresetParams params;
  if (j.is_null()) return params;
  expect_object(j, where);
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) fail(Errc::invalid_argument, where + "." + key + " must be a number");
    params[key] = value.get<double>();
  }
  return params;
}

json params_json(const PresetParams& params) {
  json j = json::object();
  for (const auto& [k, v] : params) j[k] = v;
  return j;
}

}  // namespace

OperatorDescriptor build_operator(const json& spec, const TimeGrid& grid, std::size_t in_dim) {
  expect_object(spec, "operator spec");
  if (!spec.contains("op") || !spec.at("op").is_string()) {
    fail(Errc::invalid_argument, "operator spec needs a string 'op'");
  }
  const std::string name = spec.at("op").get<std::string>();
  const std::string where = "operator " + name;

  if (name == "identity") {
    only_keys(spec, where, {"op"});
    return identity_operator();
  }
  if (name == "lebesgue") {
    only_keys(spec, where, {"op"});
    return lebesgue_integral();
  }
  if (name == "ito") {
    only_keys(spec, where, {"op", "column"});
    std::optional<std::size_t> column;
    if (spec.contains("column")) {
      std::size_t c = 0;
      read(spec, "column", c, where);
      column = c;
    }
    return ito_integral(column);
  }
  if (name == "superposition") {
    only_keys(spec, where, {"op", "coefficient"});
    if (!spec.contains("coefficient")) fail(Errc::invalid_argument, "superposition needs a coefficient");
    return superposition(build_coefficient(spec.at("coefficient")));
  }
  if (name == "clamp") {
    only_keys(spec, where, {"op", "lo", "hi"});
    double lo = -1.0, hi = 1.0;
    read(spec, "lo", lo, where);
    read(spec, "hi", hi, where);
    return clamp_operator(CompactBox::uniform(grid, in_dim, lo, hi));
  }
  if (name == "interp" || name == "mollify") {
    only_keys(spec, where, {"op", "n"});
    std::size_t n = 0;
    read(spec, "n", n, where);
    const auto level = make_level(grid, n);
    return name == "interp" ? interp_operator(level) : mollify_operator(level);
  }
  if (name == "constant") {
    only_keys(spec, where, {"op", "value"});
    if (!spec.contains("value")) fail(Errc::invalid_argument, "constant needs a value");
    const json& v = spec.at("value");
    if (v.is_number()) return constant_operator(std::vector<double>(in_dim, v.get<double>()));
    if (!v.is_array() || v.empty()) fail(Errc::invalid_argument, "constant value must be a number or array");
    std::vector<double> value;
    for (const auto& e : v) {
      if (!e.is_number()) fail(Errc::invalid_argument, "constant value entries must be numbers");
      value.push_back(e.get<double>());
    }
    return constant_operator(std::move(value));
  }
  if (name == "compose") {
    only_keys(spec, where, {"op", "parts"});
    if (!spec.contains("parts") || !spec.at("parts").is_array() || spec.at("parts").empty()) {
      fail(Errc::invalid_argument, "compose needs a nonempty 'parts' array");
    }
    std::vector<OperatorDescriptor> parts;
    std::size_t dim = in_dim;
    for (const auto& p : spec.at("parts")) {
      parts.push_back(build_operator(p, grid, dim));
      dim = output_dim(parts.back(), dim);
    }
    return compose(std::move(parts));
  }
  if (name == "sum") {
    only_keys(spec, where, {"op", "terms"});
    if (!spec.contains("terms") || !spec.at("terms").is_array() || spec.at("terms").empty()) {
      fail(Errc::invalid_argument, "sum needs a nonempty 'terms' array");
    }
    std::vector<OperatorDescriptor> terms;
    for (const auto& t : spec.at("terms")) terms.push_back(build_operator(t, grid, in_dim));
    return sum(std::move(terms));
  }
  if (name == "preset") {
    only_keys(spec, where, {"op", "preset", "params"});
    std::string preset_name;
    read(spec, "preset", preset_name, where);
    const auto p = preset(preset_name, read_params(spec.value("params", json()), where + ".params"));
    if (p.dim != in_dim) fail(Errc::dimension_mismatch, "preset " + preset_name + " acts on dimension " + std::to_string(p.dim));
    return as_operator(p);
  }
  if (name == "nonlocal_demo") {
    only_keys(spec, where, {"op"});
    return nonlocal_mean_shift();
  }
  if (name == "anticipating_demo") {
    only_keys(spec, where, {"op"});
    return anticipating_terminal_driver(in_dim);
  }
  fail(Errc::invalid_argument, "unknown operator '" + name + "'");
}

ExperimentConfig parse_config(const json& j) {
  only_keys(j, "config", {"grid", "monte_carlo", "problem", "scheme", "diagnostics", "localize", "output_dir"});
  ExperimentConfig c;

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    only_keys(g, "grid", {"a", "b", "N"});
    read(g, "a", c.grid.a, "grid");
    read(g, "b", c.grid.b, "grid");
    read(g, "N", c.grid.N, "grid");
  }
  if (j.contains("monte_carlo")) {
    const json& m = j.at("monte_carlo");
    only_keys(m, "monte_carlo", {"M", "seed", "d_w"});
    read(m, "M", c.monte_carlo.M, "monte_carlo");
    read(m, "seed", c.monte_carlo.seed, "monte_carlo");
    read(m, "d_w", c.monte_carlo.d_w, "monte_carlo");
  }
  if (!j.contains("problem")) fail(Errc::invalid_argument, "config needs a 'problem' section");
  {
    const json& p = j.at("problem");
    only_keys(p, "problem", {"preset", "params", "operator", "dim"});
    const bool has_preset = p.contains("preset"), has_op = p.contains("operator");
    if (has_preset == has_op) fail(Errc::invalid_argument, "problem needs exactly one of 'preset' or 'operator'");
    if (has_preset) {
      if (p.contains("dim")) fail(Errc::invalid_argument, "problem.dim applies to operator specs only");
      read(p, "preset", c.problem.preset, "problem");
      c.problem.params = read_params(p.value("params", json()), "problem.params");
    } else {
      if (p.contains("params")) fail(Errc::invalid_argument, "problem.params applies to presets only");
      c.problem.op = p.at("operator");
      read(p, "dim", c.problem.dim, "problem");
    }
  }
  if (j.contains("scheme")) {
    const json& s = j.at("scheme");
    only_keys(s, "scheme", {"levels", "box", "center", "base_radius", "lo", "hi", "damping", "tol", "max_iter"});
    if (s.contains("levels")) {
      if (!s.at("levels").is_array()) fail(Errc::invalid_argument, "scheme.levels must be an array");
      for (const auto& v : s.at("levels")) {
        if (!v.is_number_unsigned()) fail(Errc::invalid_argument, "scheme.levels entries must be positive integers");
        c.scheme.levels.push_back(v.get<std::size_t>());
      }
    }
    read(s, "box", c.scheme.box, "scheme");
    if (s.contains("center")) {
      if (!s.at("center").is_array()) fail(Errc::invalid_argument, "scheme.center must be an array");
      for (const auto& v : s.at("center")) {
        if (!v.is_number()) fail(Errc::invalid_argument, "scheme.center entries must be numbers");
        c.scheme.center.push_back(v.get<double>());
      }
    }
    read(s, "base_radius", c.scheme.base_radius, "scheme");
    read(s, "lo", c.scheme.lo, "scheme");
    read(s, "hi", c.scheme.hi, "scheme");
    read(s, "damping", c.scheme.damping, "scheme");
    read(s, "tol", c.scheme.tol, "scheme");
    read(s, "max_iter", c.scheme.max_iter, "scheme");
  }
  if (j.contains("diagnostics")) {
    const json& d = j.at("diagnostics");
    only_keys(d, "diagnostics", {"battery_count", "battery_seed", "tightness", "check"});
    read(d, "battery_count", c.diagnostics.battery_count, "diagnostics");
    read(d, "battery_seed", c.diagnostics.battery_seed, "diagnostics");
    if (d.contains("tightness")) {
      const json& t = d.at("tightness");
      auto& ts = c.diagnostics.tightness;
      only_keys(t, "diagnostics.tightness", {"deltas", "pair_count", "sigma", "quantile", "reference_seed",
                                             "rho", "continuity_trials", "input_bound"});
      read(t, "deltas", ts.deltas, "diagnostics.tightness");
      read(t, "pair_count", ts.pair_count, "diagnostics.tightness");
      read(t, "sigma", ts.sigma, "diagnostics.tightness");
      read(t, "quantile", ts.quantile, "diagnostics.tightness");
      read(t, "reference_seed", ts.reference_seed, "diagnostics.tightness");
      read(t, "rho", ts.rho, "diagnostics.tightness");
      read(t, "continuity_trials", ts.continuity_trials, "diagnostics.tightness");
      read(t, "input_bound", ts.input_bound, "diagnostics.tightness");
    }
    if (d.contains("check")) {
      const json& k = d.at("check");
      only_keys(k, "diagnostics.check", {"locality_trials", "adaptedness_trials"});
      read(k, "locality_trials", c.diagnostics.check.locality_trials, "diagnostics.check");
      read(k, "adaptedness_trials", c.diagnostics.check.adaptedness_trials, "diagnostics.check");
    }
  }
  if (j.contains("localize")) {
    const json& l = j.at("localize");
    only_keys(l, "localize", {"radii"});
    read(l, "radii", c.localize.radii, "localize");
  }
  read(j, "output_dir", c.output_dir, "config");
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(Errc::invalid_argument, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["grid"] = {{"a", c.grid.a}, {"b", c.grid.b}, {"N", c.grid.N}};
  j["monte_carlo"] = {{"M", c.monte_carlo.M}, {"seed", c.monte_carlo.seed}, {"d_w", c.monte_carlo.d_w}};
  if (c.problem.op.is_null()) {
    j["problem"] = {{"preset", c.problem.preset}, {"params", params_json(c.problem.params)}};
  } else {
    j["problem"] = {{"operator", c.problem.op}, {"dim", c.problem.dim}};
  }
  const auto& s = c.scheme;
  j["scheme"] = {{"levels", s.levels}, {"box", s.box}, {"center", s.center},
                 {"base_radius", s.base_radius}, {"lo", s.lo}, {"hi", s.hi},
                 {"damping", s.damping}, {"tol", s.tol}, {"max_iter", s.max_iter}};
  const auto& t = c.diagnostics.tightness;
  j["diagnostics"] = {
      {"battery_count", c.diagnostics.battery_count},
      {"battery_seed", c.diagnostics.battery_seed},
      {"tightness",
       {{"deltas", t.deltas}, {"pair_count", t.pair_count}, {"sigma", t.sigma}, {"quantile", t.quantile},
        {"reference_seed", t.reference_seed}, {"rho", t.rho}, {"continuity_trials", t.continuity_trials},
        {"input_bound", t.input_bound}}},
      {"check",
       {{"locality_trials", c.diagnostics.check.locality_trials},
        {"adaptedness_trials", c.diagnostics.check.adaptedness_trials}}}};
  j["localize"] = {{"radii", c.localize.radii}};
  j["output_dir"] = c.output_dir;
  return j;
}

TimeGrid grid_of(const ExperimentConfig& c) { return make_grid(c.grid.a, c.grid.b, c.grid.N); }

SchemeConfig scheme_of(const ExperimentConfig& c) {
  const TimeGrid grid = grid_of(c);
  SchemeConfig s;
  for (std::size_t n : c.scheme.levels) s.levels.push_back(make_level(grid, n));
  if (c.scheme.box == "fixed") {
    s.box_rule = CompactBox::uniform(grid, resolve_problem(c).dim, c.scheme.lo, c.scheme.hi);
  } else {
    s.box_rule = BoxGrowth{c.scheme.center, c.scheme.base_radius};
  }
  s.damping = c.scheme.damping;
  s.tol = c.scheme.tol;
  s.max_iter = c.scheme.max_iter;
  s.seed = c.monte_carlo.seed;
  return s;
}

ResolvedProblem resolve_problem(const ExperimentConfig& c) {
  const TimeGrid grid = grid_of(c);
  ResolvedProblem r;
  if (c.problem.op.is_null()) {
    auto p = preset(c.problem.preset, c.problem.params);
    r.dim = p.dim;
    r.op = as_operator(p);
    r.sde = std::move(p);
  } else {
    r.dim = c.problem.dim;
    r.op = build_operator(c.problem.op, grid, r.dim);
  }
  return r;
}

void validate(const ExperimentConfig& c) {
  const TimeGrid grid = grid_of(c);
  if (c.monte_carlo.M == 0) fail(Errc::invalid_argument, "monte_carlo.M must be >= 1");
  if (c.monte_carlo.d_w == 0) fail(Errc::invalid_argument, "monte_carlo.d_w must be >= 1");
  if (c.problem.op.is_null() && c.problem.dim != 1) fail(Errc::invalid_argument, "problem.dim applies to operator specs only");
  if (c.problem.dim == 0) fail(Errc::invalid_argument, "problem.dim must be >= 1");
  const auto resolved = resolve_problem(c);
  if (resolved.sde && resolved.sde->driver_dim != c.monte_carlo.d_w) {
    fail(Errc::dimension_mismatch, "preset " + c.problem.preset + " needs d_w = " +
                                       std::to_string(resolved.sde->driver_dim));
  }
  (void)output_dim(resolved.op, resolved.dim);

  if (c.scheme.box != "growth" && c.scheme.box != "fixed") {
    fail(Errc::invalid_argument, "scheme.box must be 'growth' or 'fixed'");
  }
  if (c.scheme.box == "fixed" && !(c.scheme.lo <= c.scheme.hi)) fail(Errc::invalid_argument, "scheme.lo must be <= scheme.hi");
  if (!c.scheme.center.empty() && c.scheme.center.size() != resolved.dim) {
    fail(Errc::dimension_mismatch, "scheme.center has the wrong dimension");
  }
  scheme_of(c).validate();

  const auto& t = c.diagnostics.tightness;
  for (double d : t.deltas) {
    if (!(d >= grid.dt() * (1.0 - 1e-12))) fail(Errc::invalid_argument, "tightness deltas must be >= the grid step");
  }
  if (t.pair_count < 2) fail(Errc::invalid_argument, "tightness.pair_count must be >= 2");
  if (!(t.sigma >= 0.0)) fail(Errc::invalid_argument, "tightness.sigma must be >= 0");
  if (!(t.quantile > 0.0 && t.quantile < 1.0)) fail(Errc::invalid_argument, "tightness.quantile must lie in (0, 1)");
  if (!(t.input_bound > 0.0)) fail(Errc::invalid_argument, "tightness.input_bound must be positive");
  for (double r : t.rho) {
    if (!(r > 0.0)) fail(Errc::invalid_argument, "tightness.rho values must be positive");
  }
  if (c.diagnostics.battery_count == 0) fail(Errc::invalid_argument, "diagnostics.battery_count must be >= 1");
  for (std::size_t v = 0; v < c.localize.radii.size(); ++v) {
    if (!(c.localize.radii[v] > 0.0) || (v > 0 && c.localize.radii[v] <= c.localize.radii[v - 1])) {
      fail(Errc::invalid_argument, "localize.radii must be positive and strictly increasing");
    }
  }
  if (c.output_dir.empty()) fail(Errc::invalid_argument, "output_dir must not be empty");
}

}  // namespace apfx::cli
