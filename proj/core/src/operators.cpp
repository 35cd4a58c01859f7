#include "apfx/operators.hpp"

#include <cmath>
#include <sstream>

#include "apfx/error.hpp"

namespace apfx {

const char* to_string(Causality c) noexcept {
  switch (c) {
    case Causality::strictly_causal: return "strictly_causal";
    case Causality::causal: return "causal";
    case Causality::unknown: return "unknown";
  }
  return "unknown";
}

const char* to_string(OpKind k) noexcept {
  switch (k) {
    case OpKind::superposition: return "superposition";
    case OpKind::lebesgue: return "lebesgue";
    case OpKind::ito: return "ito";
    case OpKind::clamp: return "clamp";
    case OpKind::interp: return "interp";
    case OpKind::mollify: return "mollify";
    case OpKind::constant: return "constant";
    case OpKind::sum: return "sum";
    case OpKind::composite: return "composite";
    case OpKind::custom: return "custom";
  }
  return "unknown";
}

double DriverPrefix::path(std::size_t j, std::size_t i) const {
  if (j > last_) {
    fail(Errc::operator_evaluation, "coefficient read W at node " + std::to_string(j) +
                                        " beyond its prefix 0.." + std::to_string(last_));
  }
  if (i >= driver_->dim()) {
    fail(Errc::dimension_mismatch, "coefficient read driver coordinate " + std::to_string(i) +
                                       " of a " + std::to_string(driver_->dim()) +
                                       "-dimensional driver");
  }
  return driver_->path(scenario_, j, i);
}

std::size_t CoefficientFn::output_dim(std::size_t input_dim) const {
  if (in_dim == 0) return input_dim;
  if (in_dim != input_dim) {
    fail(Errc::dimension_mismatch, "coefficient '" + name + "' expects state dimension " +
                                       std::to_string(in_dim) + ", got " +
                                       std::to_string(input_dim));
  }
  return out_dim;
}

CoefficientFn CoefficientFn::elementwise(std::string name, ScalarRule rule,
                                         std::optional<double> bound,
                                         std::optional<double> growth) {
  CoefficientFn f;
  f.name = std::move(name);
  f.bound = bound;
  f.growth = growth;
  f.rule = [rule = std::move(rule)](std::size_t k, double t, std::span<const double> x,
                                    const DriverPrefix& w, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = rule(k, t, x[i], i, w);
  };
  return f;
}

namespace coefficients {

CoefficientFn identity() {
  return CoefficientFn::elementwise(
      "x", [](std::size_t, double, double x, std::size_t, const DriverPrefix&) { return x; },
      std::nullopt, 1.0);
}

CoefficientFn zero() {
  return CoefficientFn::elementwise(
      "0", [](std::size_t, double, double, std::size_t, const DriverPrefix&) { return 0.0; }, 0.0,
      0.0);
}

CoefficientFn constant(double c) {
  std::ostringstream name;
  name << c;
  return CoefficientFn::elementwise(
      name.str(), [c](std::size_t, double, double, std::size_t, const DriverPrefix&) { return c; },
      std::abs(c), 0.0);
}

CoefficientFn linear(double slope, double offset) {
  std::ostringstream name;
  name << slope << "*x+" << offset;
  return CoefficientFn::elementwise(
      name.str(),
      [slope, offset](std::size_t, double, double x, std::size_t, const DriverPrefix&) {
        return slope * x + offset;
      },
      slope == 0.0 ? std::optional<double>(std::abs(offset)) : std::nullopt, 1.0);
}

CoefficientFn square() {
  return CoefficientFn::elementwise(
      "x^2", [](std::size_t, double, double x, std::size_t, const DriverPrefix&) { return x * x; },
      std::nullopt, 2.0);
}

CoefficientFn scaled_tanh(double c) {
  std::ostringstream name;
  name << c << "*tanh(x)";
  return CoefficientFn::elementwise(
      name.str(),
      [c](std::size_t, double, double x, std::size_t, const DriverPrefix&) {
        return c * std::tanh(x);
      },
      std::abs(c), 0.0);
}

CoefficientFn sine() {
  return CoefficientFn::elementwise(
      "sin(x)",
      [](std::size_t, double, double x, std::size_t, const DriverPrefix&) { return std::sin(x); },
      1.0, 0.0);
}

CoefficientFn time() {
  return CoefficientFn::elementwise(
      "t", [](std::size_t, double t, double, std::size_t, const DriverPrefix&) { return t; });
}

CoefficientFn driver_value() {
  return CoefficientFn::elementwise(
      "W(t)",
      [](std::size_t, double, double, std::size_t i, const DriverPrefix& w) {
        return w.current(i);
      });
}

CoefficientFn driver_sine() {
  return CoefficientFn::elementwise(
      "sin(W(t))",
      [](std::size_t, double, double, std::size_t i, const DriverPrefix& w) {
        return std::sin(w.current(i));
      },
      1.0, 0.0);
}

}  // namespace coefficients

OperatorDescriptor superposition(CoefficientFn f) {
  if (!f.rule) fail(Errc::invalid_argument, "superposition needs a coefficient rule");
  OperatorDescriptor op;
  op.kind = OpKind::superposition;
  op.causality = Causality::causal;
  op.label = "superposition[" + f.name + "]";
  op.payload = std::move(f);
  return op;
}

OperatorDescriptor identity_operator() { return superposition(coefficients::identity()); }

OperatorDescriptor lebesgue_integral() {
  OperatorDescriptor op;
  op.kind = OpKind::lebesgue;
  op.causality = Causality::strictly_causal;
  op.label = "lebesgue";
  return op;
}

OperatorDescriptor ito_integral(std::optional<std::size_t> column) {
  OperatorDescriptor op;
  op.kind = OpKind::ito;
  op.causality = Causality::strictly_causal;
  op.label = column ? "ito[W" + std::to_string(*column) + "]" : "ito";
  op.payload = ItoSpec{column};
  return op;
}

OperatorDescriptor clamp_operator(CompactBox box) {
  OperatorDescriptor op;
  op.kind = OpKind::clamp;
  op.causality = Causality::causal;
  op.label = "clamp";
  op.payload = std::move(box);
  return op;
}

OperatorDescriptor interp_operator(ProjectionLevel level) {
  if (level.n == 0) fail(Errc::invalid_argument, "projection level needs n >= 1");
  OperatorDescriptor op;
  op.kind = OpKind::interp;
  op.causality = Causality::causal;
  op.label = "interp[" + std::to_string(level.n) + "]";
  op.payload = std::move(level);
  return op;
}

OperatorDescriptor mollify_operator(ProjectionLevel level) {
  if (level.n == 0) fail(Errc::invalid_argument, "projection level needs n >= 1");
  OperatorDescriptor op;
  op.kind = OpKind::mollify;
  op.causality = Causality::causal;
  op.label = "mollify[" + std::to_string(level.n) + "]";
  op.payload = std::move(level);
  return op;
}

OperatorDescriptor constant_operator(std::vector<double> value) {
  if (value.empty()) fail(Errc::invalid_argument, "constant operator needs a value");
  OperatorDescriptor op;
  op.kind = OpKind::constant;
  op.causality = Causality::strictly_causal;
  op.label = "constant";
  op.payload = ConstantRule{std::move(value), {}};
  return op;
}

OperatorDescriptor constant_operator(std::size_t dim,
                                     std::function<void(std::size_t, std::span<double>)> per_scenario) {
  auto op = constant_operator(std::vector<double>(dim, 0.0));
  std::get<ConstantRule>(op.payload).per_scenario = std::move(per_scenario);
  op.label = "constant[per-scenario]";
  return op;
}

OperatorDescriptor sum(std::vector<OperatorDescriptor> terms) {
  if (terms.empty()) fail(Errc::invalid_argument, "sum needs at least one term");
  OperatorDescriptor op;
  op.kind = OpKind::sum;
  op.causality = Causality::strictly_causal;
  for (const auto& t : terms) op.causality = weaker(op.causality, t.causality);
  op.label = "sum";
  op.parts = std::move(terms);
  return op;
}

namespace {

Causality chain_causality(std::span<const Causality> parts) {
  bool any_strict = false;
  for (Causality c : parts) {
    if (c == Causality::unknown) return Causality::unknown;
    any_strict = any_strict || c == Causality::strictly_causal;
  }
  return any_strict ? Causality::strictly_causal : Causality::causal;
}

}  // namespace

OperatorDescriptor compose(std::vector<OperatorDescriptor> parts) {
  if (parts.empty()) fail(Errc::invalid_argument, "composition needs at least one part");
  OperatorDescriptor op;
  op.kind = OpKind::composite;
  std::vector<Causality> cs;
  for (const auto& p : parts) cs.push_back(p.causality);
  op.causality = chain_causality(cs);
  op.label = "compose";
  op.parts = std::move(parts);
  return op;
}

OperatorDescriptor custom_operator(CustomOp custom, Causality declared) {
  if (!custom.fn) fail(Errc::invalid_argument, "custom operator needs a function");
  OperatorDescriptor op;
  op.kind = OpKind::custom;
  op.causality = declared;
  op.label = "custom[" + custom.name + "]";
  op.payload = std::move(custom);
  return op;
}

OperatorDescriptor with_causality(OperatorDescriptor op, Causality declared) {
  op.causality = weaker(op.causality, declared);
  return op;
}

OperatorDescriptor nonlocal_mean_shift() {
  CustomOp c;
  c.name = "nonlocal_mean_shift";
  c.fn = [](const PathEnsemble& x, const DriverEnsemble&) {
    PathEnsemble y = x;
    const std::size_t stride = x.scenario_stride();
    std::vector<double> mean(stride, 0.0);
    for (std::size_t m = 0; m < x.scenarios(); ++m) {
      const auto s = x.scenario(m);
      for (std::size_t e = 0; e < stride; ++e) mean[e] += s[e];
    }
    for (double& v : mean) v /= static_cast<double>(x.scenarios());
    for (std::size_t m = 0; m < y.scenarios(); ++m) {
      auto s = y.scenario(m);
      for (std::size_t e = 0; e < stride; ++e) s[e] += mean[e];
    }
    return y;
  };
  return custom_operator(std::move(c), Causality::causal);
}

OperatorDescriptor anticipating_terminal_driver(std::size_t dim) {
  CustomOp c;
  c.name = "anticipating_terminal_driver";
  c.out_dim = dim;
  c.fn = [dim](const PathEnsemble& x, const DriverEnsemble& w) {
    PathEnsemble y(x.grid(), x.scenarios(), dim);
    const std::size_t last = x.grid().steps();
    for (std::size_t m = 0; m < x.scenarios(); ++m) {
      for (std::size_t k = 0; k < x.node_count(); ++k) {
        for (std::size_t i = 0; i < dim; ++i) y.at(m, k, i) = w.path(m, last, 0);
      }
    }
    return y;
  };
  // Declared causal on purpose: the adaptedness harness must catch the lie.
  return custom_operator(std::move(c), Causality::causal);
}

std::size_t output_dim(const OperatorDescriptor& op, std::size_t d) {
  switch (op.kind) {
    case OpKind::superposition:
      return std::get<CoefficientFn>(op.payload).output_dim(d);
    case OpKind::lebesgue:
    case OpKind::ito:
    case OpKind::interp:
    case OpKind::mollify:
      return d;
    case OpKind::clamp: {
      const auto& box = std::get<CompactBox>(op.payload);
      if (box.dim() != d) {
        fail(Errc::dimension_mismatch, "clamp box has dimension " + std::to_string(box.dim()) +
                                           ", input has " + std::to_string(d));
      }
      return d;
    }
    case OpKind::constant:
      return std::get<ConstantRule>(op.payload).value.size();
    case OpKind::sum: {
      const std::size_t first = output_dim(op.parts.front(), d);
      for (std::size_t t = 1; t < op.parts.size(); ++t) {
        if (output_dim(op.parts[t], d) != first) {
          fail(Errc::dimension_mismatch, "sum terms have different output dimensions");
        }
      }
      return first;
    }
    case OpKind::composite: {
      std::size_t cur = d;
      for (const auto& p : op.parts) cur = output_dim(p, cur);
      return cur;
    }
    case OpKind::custom: {
      const auto& c = std::get<CustomOp>(op.payload);
      return c.out_dim == 0 ? d : c.out_dim;
    }
  }
  return d;
}

Causality effective_causality(const OperatorDescriptor& op, const TimeGrid& grid) {
  Causality structural = op.causality;
  switch (op.kind) {
    case OpKind::interp:
    case OpKind::mollify:
      // Between anchors the output reads the next anchor.
      structural = std::get<ProjectionLevel>(op.payload).is_identity_on(grid) ? Causality::causal
                                                                              : Causality::unknown;
      break;
    case OpKind::sum:
      structural = Causality::strictly_causal;
      for (const auto& t : op.parts) structural = weaker(structural, effective_causality(t, grid));
      break;
    case OpKind::composite: {
      std::vector<Causality> cs;
      for (const auto& p : op.parts) cs.push_back(effective_causality(p, grid));
      structural = chain_causality(cs);
      break;
    }
    default:
      break;
  }
  return weaker(structural, op.causality);
}

std::string describe(const OperatorDescriptor& op) {
  if (op.kind != OpKind::sum && op.kind != OpKind::composite) return op.label;
  std::string out = op.kind == OpKind::sum ? "sum(" : "compose(";
  for (std::size_t i = 0; i < op.parts.size(); ++i) {
    if (i) out += op.kind == OpKind::sum ? " + " : " -> ";
    out += describe(op.parts[i]);
  }
  return out + ")";
}

}  // namespace apfx
