#pragma once

// Stochastic initial value problems
//   dx = f0(t, x) dt + sum_j fj(t, x) dW_j,  x(a) = x0
// packaged as integral operators (hx)(t) = x0 + int f0 ds + sum_j int fj dW_j.

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apfx/fixpoint.hpp"
#include "apfx/operators.hpp"

namespace apfx {

struct SDEProblem {
  std::string name;
  std::size_t dim = 1;
  std::size_t driver_dim = 1;
  std::vector<double> x0;
  // Optional F_a-measurable per-scenario initial value; overrides x0.
  std::function<void(std::size_t scenario, std::span<double> out)> x0_rule;
  CoefficientFn drift;
  std::vector<CoefficientFn> diffusions;  // one per driver column

  // Throws dimension_mismatch.
  void validate() const;
};

OperatorDescriptor as_operator(const SDEProblem& p);

// The path that sits at the initial value at every node.
PathEnsemble initial_guess(const SDEProblem& p, const TimeGrid& grid, std::size_t scenarios);

using PresetParams = std::map<std::string, double>;

// gbm(mu, sigma, x0), ou(theta, sigma, x0), bounded_tanh(c, x0),
// driver_coupled(x0). Missing parameters take defaults; unknown names throw
// unknown_preset, unknown parameter keys throw invalid_argument.
SDEProblem preset(const std::string& name, const PresetParams& params = {});

std::vector<std::string> preset_names();

// The same problem with every coefficient evaluated at the projection of the
// state onto the ball of `radius` around x0.
SDEProblem localize(const SDEProblem& p, double radius);

struct LocalizedSolution {
  PathEnsemble path;                       // solution for the largest radius
  std::vector<std::size_t> stopping_nodes;  // first node with |x - x0| > r_max, N otherwise
  std::vector<bool> exit_flags;
  std::vector<std::vector<std::size_t>> stopping_by_radius;  // [radius][scenario]
  std::vector<PathEnsemble> by_radius;
  bool consistent = true;  // consecutive radii agree bitwise on [0, tau_{nu-1}]
  bool converged = true;
};

// Each radius is solved at the last level of `config` (with its box), starting
// from initial_guess.
LocalizedSolution solve_localized(const SDEProblem& p, const std::vector<double>& radii,
                                  const DriverEnsemble& driver, const SchemeConfig& config);

}  // namespace apfx
