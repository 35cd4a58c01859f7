#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "apfx/fixpoint.hpp"
#include "apfx/operators.hpp"
#include "apfx/pathspace.hpp"
#include "apfx/problems.hpp"

namespace apfx::cli {

struct GridSpec {
  double a = 0.0;
  double b = 1.0;
  std::size_t N = 64;
  bool operator==(const GridSpec&) const = default;
};

struct MonteCarloSpec {
  std::size_t M = 1000;
  std::uint64_t seed = 1;
  std::size_t d_w = 1;
  bool operator==(const MonteCarloSpec&) const = default;
};

// Either a named preset or a raw operator spec acting on `dim`-dimensional paths.
struct ProblemSpec {
  std::string preset;
  PresetParams params;
  nlohmann::json op;  // null when a preset is used
  std::size_t dim = 1;
  bool operator==(const ProblemSpec&) const = default;
};

struct SchemeSpec {
  std::vector<std::size_t> levels;
  std::string box = "growth";  // "growth" or "fixed"
  std::vector<double> center;
  double base_radius = 10.0;
  double lo = -1e6;
  double hi = 1e6;
  double damping = 0.5;
  double tol = 1e-8;
  std::size_t max_iter = 200;
  bool operator==(const SchemeSpec&) const = default;
};

struct TightnessSpec {
  std::vector<double> deltas{0.0625, 0.125, 0.25};
  std::size_t pair_count = 64;
  double sigma = 0.05;
  double quantile = 0.99;
  std::uint64_t reference_seed = 987654321;
  std::vector<double> rho{0.01, 0.1, 0.5};
  std::size_t continuity_trials = 4;
  double input_bound = 1.0;
  bool operator==(const TightnessSpec&) const = default;
};

struct CheckSpec {
  std::size_t locality_trials = 100;
  std::size_t adaptedness_trials = 2;
  bool operator==(const CheckSpec&) const = default;
};

struct DiagnosticsSpec {
  std::size_t battery_count = 8;
  std::uint64_t battery_seed = 7;
  TightnessSpec tightness;
  CheckSpec check;
  bool operator==(const DiagnosticsSpec&) const = default;
};

struct LocalizeSpec {
  std::vector<double> radii{1.0, 2.0, 4.0, 8.0};
  bool operator==(const LocalizeSpec&) const = default;
};

struct ExperimentConfig {
  GridSpec grid;
  MonteCarloSpec monte_carlo;
  ProblemSpec problem;
  SchemeSpec scheme;
  DiagnosticsSpec diagnostics;
  LocalizeSpec localize;
  std::string output_dir = "out";
  bool operator==(const ExperimentConfig&) const = default;
};

// Parses and validates. Throws apfx::Error (unknown keys, wrong types,
// inconsistent values).
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& c);

// Throws apfx::Error.
void validate(const ExperimentConfig& c);

TimeGrid grid_of(const ExperimentConfig& c);
SchemeConfig scheme_of(const ExperimentConfig& c);

// Operator spec grammar: {"op": name, ...}. See README for the list.
OperatorDescriptor build_operator(const nlohmann::json& spec, const TimeGrid& grid, std::size_t in_dim);

struct ResolvedProblem {
  OperatorDescriptor op;
  std::size_t dim = 1;
  std::optional<SDEProblem> sde;  // set for presets
};

ResolvedProblem resolve_problem(const ExperimentConfig& c);

}  // namespace apfx::cli
