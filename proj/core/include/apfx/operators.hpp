#pragma once

// Local operators on ensembles of adapted paths.
//
// An operator is an immutable expression tree (OperatorDescriptor). Built-in
// nodes act scenario-wise, which is what makes them local: output scenario m
// is computed from input scenario m and driver scenario m only. Custom nodes
// see the whole ensemble and carry a declared causality; they exist for
// user extensions and for planting violations in the property harnesses.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "apfx/pathspace.hpp"
#include "apfx/projective.hpp"

namespace apfx {

// strictly_causal: output at node k reads the input at nodes < k only.
// causal: output at node k reads the input at nodes <= k.
enum class Causality { strictly_causal = 0, causal = 1, unknown = 2 };

const char* to_string(Causality c) noexcept;

// The weaker of two causality classes.
constexpr Causality weaker(Causality a, Causality b) noexcept {
  return static_cast<int>(a) > static_cast<int>(b) ? a : b;
}

// Scenario driver restricted to nodes 0..k. Reading past k throws, which is how
// coefficient adaptedness is enforced rather than merely documented.
class DriverPrefix {
 public:
  DriverPrefix(const DriverEnsemble& driver, std::size_t scenario, std::size_t last_node) noexcept
      : driver_(&driver), scenario_(scenario), last_(last_node) {}

  std::size_t last_node() const noexcept { return last_; }
  std::size_t dim() const noexcept { return driver_->dim(); }
  std::size_t scenario() const noexcept { return scenario_; }

  // W_i(t_j), j <= last_node().
  double path(std::size_t j, std::size_t i) const;
  // W_i(t_last).
  double current(std::size_t i) const { return path(last_, i); }

 private:
  const DriverEnsemble* driver_;
  std::size_t scenario_;
  std::size_t last_;
};

// Random Caratheodory coefficient f(omega, t, x), with omega entering only
// through the driver prefix.
struct CoefficientFn {
  using Rule = std::function<void(std::size_t k, double t, std::span<const double> x,
                                  const DriverPrefix& w, std::span<double> out)>;

  std::string name;
  // in_dim == 0 means "any input dimension, output dimension equal to it".
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Rule rule;
  std::optional<double> bound;   // uniform bound sup |f|, when known
  std::optional<double> growth;  // exponent p in |f| <= A + C|x|^p, when known

  std::size_t output_dim(std::size_t input_dim) const;

  using ScalarRule =
      std::function<double(std::size_t k, double t, double x, std::size_t coord, const DriverPrefix& w)>;
  // Applies a scalar rule coordinate by coordinate.
  static CoefficientFn elementwise(std::string name, ScalarRule rule,
                                   std::optional<double> bound = std::nullopt,
                                   std::optional<double> growth = std::nullopt);
};

namespace coefficients {
CoefficientFn identity();
CoefficientFn zero();
CoefficientFn constant(double c);
CoefficientFn linear(double slope, double offset);  // slope * x + offset
CoefficientFn square();
CoefficientFn scaled_tanh(double c);  // c * tanh(x), bounded by |c|
CoefficientFn sine();                 // sin(x)
CoefficientFn time();                 // t
CoefficientFn driver_value();         // W_i(t) for coordinate i
CoefficientFn driver_sine();          // sin(W_i(t)), state-independent
}  // namespace coefficients

struct ItoSpec {
  // Integrate every state coordinate against this driver column; when empty
  // coordinate i is paired with driver coordinate i (requires d == d_w).
  std::optional<std::size_t> column;
};

struct ConstantRule {
  std::vector<double> value;
  // Optional per-scenario (F_a-measurable) value; overrides `value` when set.
  std::function<void(std::size_t scenario, std::span<double> out)> per_scenario;
};

struct CustomOp {
  std::string name;
  std::function<PathEnsemble(const PathEnsemble&, const DriverEnsemble&)> fn;
  std::size_t out_dim = 0;  // 0: same as input
};

enum class OpKind {
  superposition,
  lebesgue,
  ito,
  clamp,
  interp,
  mollify,
  constant,
  sum,
  composite,
  custom,
};

const char* to_string(OpKind k) noexcept;

struct OperatorDescriptor {
  using Payload = std::variant<std::monostate, CoefficientFn, ItoSpec, CompactBox, ProjectionLevel,
                               ConstantRule, CustomOp>;

  OpKind kind = OpKind::superposition;
  // Declared class. The class used by solvers is effective_causality(), which
  // can only be weaker than this for built-ins that depend on the grid.
  Causality causality = Causality::unknown;
  // sum: terms; composite: parts in application order (parts[0] acts first).
  std::vector<OperatorDescriptor> parts;
  Payload payload;
  std::string label;
};

OperatorDescriptor superposition(CoefficientFn f);
OperatorDescriptor identity_operator();
OperatorDescriptor lebesgue_integral();
OperatorDescriptor ito_integral(std::optional<std::size_t> column = std::nullopt);
OperatorDescriptor clamp_operator(CompactBox box);
OperatorDescriptor interp_operator(ProjectionLevel level);
OperatorDescriptor mollify_operator(ProjectionLevel level);
OperatorDescriptor constant_operator(std::vector<double> value);
OperatorDescriptor constant_operator(std::size_t dim,
                                     std::function<void(std::size_t, std::span<double>)> per_scenario);
OperatorDescriptor sum(std::vector<OperatorDescriptor> terms);
// compose({f, g}) is g after f: g(f(x)).
OperatorDescriptor compose(std::vector<OperatorDescriptor> parts);
OperatorDescriptor custom_operator(CustomOp op, Causality declared);
// Weakens the declared causality (never strengthens it).
OperatorDescriptor with_causality(OperatorDescriptor op, Causality declared);

// Planted violations for the property harnesses.
// x -> x + (cross-scenario mean of x): not local.
OperatorDescriptor nonlocal_mean_shift();
// y[m][k] = W[m][N] (first coordinate, broadcast): not adapted.
OperatorDescriptor anticipating_terminal_driver(std::size_t dim);

// Output dimension for the given input dimension; throws dimension_mismatch.
std::size_t output_dim(const OperatorDescriptor& op, std::size_t input_dim);

Causality effective_causality(const OperatorDescriptor& op, const TimeGrid& grid);

std::string describe(const OperatorDescriptor& op);

// Evaluates op scenario-wise. Throws shape_mismatch when x and driver disagree
// on grid or scenario count, dimension_mismatch for incompatible compositions,
// operator_evaluation (with scenario/node location) when a coefficient fails
// or produces a non-finite value.
PathEnsemble apply(const OperatorDescriptor& op, const PathEnsemble& x, const DriverEnsemble& driver);

// Fixed point of a strictly causal op, node by node from node 0. `start`
// supplies the shape (its values are overwritten). Each node costs one
// incremental evaluation, so the total cost matches one application.
PathEnsemble forward_substitute(const OperatorDescriptor& op, const PathEnsemble& start,
                                const DriverEnsemble& driver);

// --- property harnesses ------------------------------------------------------

struct Location {
  std::size_t scenario = 0;
  std::size_t node = 0;
  std::size_t coord = 0;
};

struct LocalityCounterexample {
  std::size_t trial = 0;
  std::vector<std::size_t> subset;  // scenarios in A
  Location where;
  bool inside_subset = false;  // the mismatch was against h(x) on A (true) or h(y) off A
};

struct LocalityReport {
  std::size_t trials = 0;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::optional<LocalityCounterexample> first_counterexample;

  bool ok() const noexcept { return failed == 0; }
};

// Splices z = x on a random scenario subset A and y off A, then checks
// h(z) == h(x) on A and h(z) == h(y) off A, bitwise.
LocalityReport locality_check(const OperatorDescriptor& op, const PathEnsemble& x,
                              const PathEnsemble& y, const DriverEnsemble& driver,
                              std::size_t trials, std::uint64_t seed);

struct ProblemDims {
  TimeGrid grid;
  std::size_t scenarios = 1;
  std::size_t dim = 1;
  std::size_t driver_dim = 1;
};

struct AdaptednessReport {
  std::size_t split = 0;
  std::size_t trials = 0;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::optional<std::pair<std::size_t, Location>> first_failure;  // (trial, location)

  bool ok() const noexcept { return failed == 0; }
};

using DriverMap = std::function<PathEnsemble(const DriverEnsemble&)>;

// Runs `map` on two drivers that share increments before `split` and differ
// after it; outputs must agree bitwise on nodes 0..split.
AdaptednessReport adaptedness_check(const DriverMap& map, const ProblemDims& dims,
                                    std::size_t split, std::size_t trials, std::uint64_t seed);

// Operator form: the same deterministic input (drawn from seed, trial) is fed
// under both drivers.
AdaptednessReport adaptedness_check(const OperatorDescriptor& op, const ProblemDims& dims,
                                    std::size_t split, std::size_t trials, std::uint64_t seed);

// Random N(0,1) input ensemble keyed by (seed, tag); used by the harnesses.
PathEnsemble random_input(const TimeGrid& grid, std::size_t scenarios, std::size_t dim,
                          std::uint64_t seed, std::uint64_t tag);

}  // namespace apfx
