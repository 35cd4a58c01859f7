// Scenario-wise evaluation of operator trees.
//
// Each tree is compiled into a DAG of lazily evaluated nodes over one scenario.
// A node memoizes its output up to the last node index requested, and reads
// children only at the indices its causality allows. The same DAG serves a
// full application (request every node) and forward substitution (request
// node k, write it back into the input, move on), so both routes perform the
// same floating-point operations in the same order.

#include <algorithm>
#include <cmath>
#include <memory>

#include "apfx/error.hpp"
#include "apfx/operators.hpp"
#include "apfx/parallel.hpp"
#include "kernels.hpp"

namespace apfx {
namespace {

struct Context {
  const TimeGrid* grid = nullptr;
  const DriverEnsemble* driver = nullptr;
  std::size_t scenario = 0;
  std::span<const double> input;
  std::size_t input_dim = 0;
};

class Node {
 public:
  Node(const Context& ctx, std::size_t dim)
      : ctx_(ctx), dim_(dim), buf_(ctx.grid->node_count() * dim) {}
  virtual ~Node() = default;

  std::size_t dim() const noexcept { return dim_; }

  virtual std::span<const double> at(std::size_t k) {
    if (k >= ready_) {
      advance(k);
      ready_ = std::max(ready_, k + 1);
    }
    return {buf_.data() + k * dim_, dim_};
  }

  virtual void reset() { ready_ = 0; }

 protected:
  // Fill buf_ for nodes ready_..k (may fill further).
  virtual void advance(std::size_t k) = 0;

  std::span<double> slot(std::size_t k) { return {buf_.data() + k * dim_, dim_}; }

  const Context& ctx_;
  std::size_t dim_;
  std::vector<double> buf_;
  std::size_t ready_ = 0;
};

class InputNode final : public Node {
 public:
  explicit InputNode(const Context& ctx) : Node(ctx, ctx.input_dim) {}
  std::span<const double> at(std::size_t k) override {
    return ctx_.input.subspan(k * dim_, dim_);
  }

 protected:
  void advance(std::size_t) override {}
};

class SuperpositionNode final : public Node {
 public:
  SuperpositionNode(const Context& ctx, Node* child, const CoefficientFn& f)
      : Node(ctx, f.output_dim(child->dim())), child_(child), f_(f) {}

 protected:
  void advance(std::size_t k) override {
    for (std::size_t j = ready_; j <= k; ++j) {
      const auto x = child_->at(j);
      auto out = slot(j);
      try {
        f_.rule(j, ctx_.grid->node(j), x, DriverPrefix(*ctx_.driver, ctx_.scenario, j), out);
      } catch (const std::exception& e) {
        fail(Errc::operator_evaluation, "coefficient '" + f_.name + "' failed at scenario " +
                                            std::to_string(ctx_.scenario) + ", node " +
                                            std::to_string(j) + ": " + e.what());
      }
      for (double v : out) {
        if (!std::isfinite(v)) {
          fail(Errc::operator_evaluation, "coefficient '" + f_.name +
                                              "' returned a non-finite value at scenario " +
                                              std::to_string(ctx_.scenario) + ", node " +
                                              std::to_string(j));
        }
      }
    }
  }

 private:
  Node* child_;
  const CoefficientFn& f_;
};

class LebesgueNode final : public Node {
 public:
  LebesgueNode(const Context& ctx, Node* child) : Node(ctx, child->dim()), child_(child) {}

 protected:
  void advance(std::size_t k) override {
    const double dt = ctx_.grid->dt();
    for (std::size_t j = ready_; j <= k; ++j) {
      auto out = slot(j);
      if (j == 0) {
        std::fill(out.begin(), out.end(), 0.0);
        continue;
      }
      const auto prev = slot(j - 1);
      const auto x = child_->at(j - 1);
      for (std::size_t i = 0; i < dim_; ++i) out[i] = prev[i] + x[i] * dt;
    }
  }

 private:
  Node* child_;
};

class ItoNode final : public Node {
 public:
  ItoNode(const Context& ctx, Node* child, std::optional<std::size_t> column)
      : Node(ctx, child->dim()), child_(child), column_(column) {}

 protected:
  void advance(std::size_t k) override {
    const auto& w = *ctx_.driver;
    const std::size_t m = ctx_.scenario;
    for (std::size_t j = ready_; j <= k; ++j) {
      auto out = slot(j);
      if (j == 0) {
        std::fill(out.begin(), out.end(), 0.0);
        continue;
      }
      const auto prev = slot(j - 1);
      const auto x = child_->at(j - 1);
      for (std::size_t i = 0; i < dim_; ++i) {
        const double dw = w.increment(m, j - 1, column_ ? *column_ : i);
        out[i] = prev[i] + x[i] * dw;
      }
    }
  }

 private:
  Node* child_;
  std::optional<std::size_t> column_;
};

class ClampNode final : public Node {
 public:
  ClampNode(const Context& ctx, Node* child, const CompactBox& box)
      : Node(ctx, child->dim()), child_(child), box_(box) {}

 protected:
  void advance(std::size_t k) override {
    for (std::size_t j = ready_; j <= k; ++j) {
      const auto x = child_->at(j);
      auto out = slot(j);
      for (std::size_t i = 0; i < dim_; ++i) out[i] = std::clamp(x[i], box_.lo(j, i), box_.hi(j, i));
    }
  }

 private:
  Node* child_;
  const CompactBox& box_;
};

// Interpolation and mollification. With one grid step between anchors both
// act node-locally and stream; otherwise the whole child path is needed.
class ProjectionNode final : public Node {
 public:
  ProjectionNode(const Context& ctx, Node* child, const ProjectionLevel& level, bool smooth)
      : Node(ctx, child->dim()),
        child_(child),
        stride_(level.stride(*ctx.grid)),
        smooth_(smooth),
        tmp_(buf_.size()) {
    if (smooth_) weights_ = mollifier_weights(*ctx.grid, level);
  }

 protected:
  void advance(std::size_t k) override {
    const std::size_t nodes = ctx_.grid->node_count();
    if (stride_ == 1 && !smooth_) {
      for (std::size_t j = ready_; j <= k; ++j) {
        const auto x = child_->at(j);
        std::copy(x.begin(), x.end(), slot(j).begin());
      }
      return;
    }
    for (std::size_t j = 0; j < nodes; ++j) {
      const auto x = child_->at(j);
      std::copy(x.begin(), x.end(), tmp_.begin() + static_cast<std::ptrdiff_t>(j * dim_));
    }
    if (smooth_) {
      std::vector<double> interp(tmp_.size());
      detail::interp_path(tmp_, interp, dim_, nodes, stride_);
      detail::convolve_causal(interp, buf_, dim_, nodes, weights_, ctx_.grid->dt());
    } else {
      detail::interp_path(tmp_, buf_, dim_, nodes, stride_);
    }
    ready_ = nodes;
  }

 private:
  Node* child_;
  std::size_t stride_;
  bool smooth_;
  std::vector<double> tmp_;
  std::vector<double> weights_;
};

class ConstantNode final : public Node {
 public:
  ConstantNode(const Context& ctx, const ConstantRule& rule)
      : Node(ctx, rule.value.size()), rule_(rule), value_(rule.value) {}

  void reset() override {
    Node::reset();
    if (rule_.per_scenario) rule_.per_scenario(ctx_.scenario, value_);
  }

 protected:
  void advance(std::size_t k) override {
    for (std::size_t j = ready_; j <= k; ++j) std::copy(value_.begin(), value_.end(), slot(j).begin());
  }

 private:
  const ConstantRule& rule_;
  std::vector<double> value_;
};

class SumNode final : public Node {
 public:
  SumNode(const Context& ctx, std::vector<Node*> terms)
      : Node(ctx, terms.front()->dim()), terms_(std::move(terms)) {}

 protected:
  void advance(std::size_t k) override {
    for (std::size_t j = ready_; j <= k; ++j) {
      auto out = slot(j);
      const auto first = terms_.front()->at(j);
      std::copy(first.begin(), first.end(), out.begin());
      for (std::size_t t = 1; t < terms_.size(); ++t) {
        const auto v = terms_[t]->at(j);
        for (std::size_t i = 0; i < dim_; ++i) out[i] += v[i];
      }
    }
  }

 private:
  std::vector<Node*> terms_;
};

bool contains_custom(const OperatorDescriptor& op) {
  if (op.kind == OpKind::custom) return true;
  return std::any_of(op.parts.begin(), op.parts.end(), contains_custom);
}

// Structural validation against the concrete grid/driver; returns the output dimension.
std::size_t check_tree(const OperatorDescriptor& op, std::size_t d, const TimeGrid& grid,
                       std::size_t driver_dim) {
  switch (op.kind) {
    case OpKind::ito: {
      const auto& spec = std::get<ItoSpec>(op.payload);
      if (spec.column) {
        if (*spec.column >= driver_dim) {
          fail(Errc::dimension_mismatch, "ito column " + std::to_string(*spec.column) +
                                             " out of range for a " + std::to_string(driver_dim) +
                                             "-dimensional driver");
        }
      } else if (d != driver_dim) {
        fail(Errc::dimension_mismatch, "ito integrand dimension " + std::to_string(d) +
                                           " differs from driver dimension " +
                                           std::to_string(driver_dim));
      }
      return d;
    }
    case OpKind::clamp: {
      const auto& box = std::get<CompactBox>(op.payload);
      if (box.node_count() != grid.node_count()) {
        fail(Errc::shape_mismatch, "clamp box has " + std::to_string(box.node_count()) +
                                       " nodes, grid has " + std::to_string(grid.node_count()));
      }
      return output_dim(op, d);
    }
    case OpKind::interp:
    case OpKind::mollify:
      (void)std::get<ProjectionLevel>(op.payload).stride(grid);
      return d;
    case OpKind::sum: {
      const std::size_t first = check_tree(op.parts.front(), d, grid, driver_dim);
      for (std::size_t t = 1; t < op.parts.size(); ++t) {
        if (check_tree(op.parts[t], d, grid, driver_dim) != first) {
          fail(Errc::dimension_mismatch, "sum terms have different output dimensions");
        }
      }
      return first;
    }
    case OpKind::composite: {
      std::size_t cur = d;
      for (const auto& p : op.parts) cur = check_tree(p, cur, grid, driver_dim);
      return cur;
    }
    default:
      return output_dim(op, d);
  }
}

class ScenarioEngine {
 public:
  ScenarioEngine(const OperatorDescriptor& op, const TimeGrid& grid, std::size_t input_dim,
                 const DriverEnsemble& driver) {
    ctx_.grid = &grid;
    ctx_.driver = &driver;
    ctx_.input_dim = input_dim;
    input_ = add(std::make_unique<InputNode>(ctx_));
    top_ = compile(op, input_);
  }

  void bind(std::size_t scenario, std::span<const double> input) {
    ctx_.scenario = scenario;
    ctx_.input = input;
    for (auto& n : nodes_) n->reset();
  }

  Node& top() { return *top_; }

 private:
  Node* add(std::unique_ptr<Node> n) {
    nodes_.push_back(std::move(n));
    return nodes_.back().get();
  }

  Node* compile(const OperatorDescriptor& op, Node* child) {
    switch (op.kind) {
      case OpKind::superposition:
        return add(std::make_unique<SuperpositionNode>(ctx_, child,
                                                       std::get<CoefficientFn>(op.payload)));
      case OpKind::lebesgue:
        return add(std::make_unique<LebesgueNode>(ctx_, child));
      case OpKind::ito:
        return add(std::make_unique<ItoNode>(ctx_, child, std::get<ItoSpec>(op.payload).column));
      case OpKind::clamp:
        return add(std::make_unique<ClampNode>(ctx_, child, std::get<CompactBox>(op.payload)));
      case OpKind::interp:
        return add(std::make_unique<ProjectionNode>(ctx_, child,
                                                    std::get<ProjectionLevel>(op.payload), false));
      case OpKind::mollify:
        return add(std::make_unique<ProjectionNode>(ctx_, child,
                                                    std::get<ProjectionLevel>(op.payload), true));
      case OpKind::constant:
        return add(std::make_unique<ConstantNode>(ctx_, std::get<ConstantRule>(op.payload)));
      case OpKind::sum: {
        std::vector<Node*> terms;
        for (const auto& t : op.parts) terms.push_back(compile(t, child));
        return add(std::make_unique<SumNode>(ctx_, std::move(terms)));
      }
      case OpKind::composite: {
        Node* cur = child;
        for (const auto& p : op.parts) cur = compile(p, cur);
        return cur;
      }
      case OpKind::custom:
        break;
    }
    fail(Errc::invalid_argument, "custom operators are evaluated at ensemble level");
  }

  Context ctx_;
  std::vector<std::unique_ptr<Node>> nodes_;
  Node* input_ = nullptr;
  Node* top_ = nullptr;
};

void check_finite(const PathEnsemble& y, const OperatorDescriptor& op) {
  const auto v = y.values();
  const auto it = std::find_if(v.begin(), v.end(), [](double e) { return !std::isfinite(e); });
  if (it == v.end()) return;
  const std::size_t e = static_cast<std::size_t>(it - v.begin());
  const std::size_t m = e / y.scenario_stride();
  const std::size_t k = (e % y.scenario_stride()) / y.dim();
  fail(Errc::operator_evaluation, "operator " + describe(op) + " produced a non-finite value at scenario " +
                                      std::to_string(m) + ", node " + std::to_string(k));
}

PathEnsemble run_engine(const OperatorDescriptor& op, const PathEnsemble& x,
                        const DriverEnsemble& driver, std::size_t out_dim) {
  PathEnsemble y(x.grid(), x.scenarios(), out_dim);
  const std::size_t last = x.grid().steps();
  parallel_for(x.scenarios(), [&](std::size_t begin, std::size_t end, std::size_t) {
    ScenarioEngine engine(op, x.grid(), x.dim(), driver);
    for (std::size_t m = begin; m < end; ++m) {
      engine.bind(m, x.scenario(m));
      auto& top = engine.top();
      (void)top.at(last);
      auto out = y.scenario(m);
      for (std::size_t k = 0; k <= last; ++k) {
        const auto v = top.at(k);
        std::copy(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>(k * out_dim));
      }
    }
  });
  return y;
}

PathEnsemble apply_impl(const OperatorDescriptor& op, const PathEnsemble& x,
                        const DriverEnsemble& driver) {
  if (!contains_custom(op)) {
    return run_engine(op, x, driver, check_tree(op, x.dim(), x.grid(), driver.dim()));
  }
  switch (op.kind) {
    case OpKind::custom: {
      const auto& c = std::get<CustomOp>(op.payload);
      PathEnsemble y = c.fn(x, driver);
      if (y.grid() != x.grid() || y.scenarios() != x.scenarios() || y.dim() != output_dim(op, x.dim())) {
        fail(Errc::shape_mismatch, "custom operator '" + c.name + "' returned the wrong shape");
      }
      return y;
    }
    case OpKind::composite: {
      PathEnsemble cur = x;
      for (const auto& p : op.parts) cur = apply_impl(p, cur, driver);
      return cur;
    }
    case OpKind::sum: {
      PathEnsemble acc = apply_impl(op.parts.front(), x, driver);
      for (std::size_t t = 1; t < op.parts.size(); ++t) {
        const PathEnsemble term = apply_impl(op.parts[t], x, driver);
        if (!term.same_shape(acc)) fail(Errc::dimension_mismatch, "sum terms have different shapes");
        auto a = acc.values();
        const auto b = term.values();
        for (std::size_t e = 0; e < a.size(); ++e) a[e] += b[e];
      }
      return acc;
    }
    default:
      break;
  }
  fail(Errc::invalid_argument, "unexpected operator node");
}

void check_driver(const PathEnsemble& x, const DriverEnsemble& driver) {
  if (!(x.grid() == driver.grid()) || x.scenarios() != driver.scenarios()) {
    fail(Errc::shape_mismatch, "input ensemble and driver differ in grid or scenario count");
  }
}

}  // namespace

PathEnsemble apply(const OperatorDescriptor& op, const PathEnsemble& x, const DriverEnsemble& driver) {
  check_driver(x, driver);
  PathEnsemble y = apply_impl(op, x, driver);
  check_finite(y, op);
  return y;
}

PathEnsemble forward_substitute(const OperatorDescriptor& op, const PathEnsemble& start,
                                const DriverEnsemble& driver) {
  check_driver(start, driver);
  if (effective_causality(op, start.grid()) != Causality::strictly_causal) {
    fail(Errc::invalid_argument, "forward substitution needs a strictly causal operator, got " +
                                     std::string(to_string(effective_causality(op, start.grid()))));
  }
  const std::size_t d = start.dim();
  PathEnsemble alpha = start;
  const std::size_t nodes = start.node_count();

  if (contains_custom(op)) {
    // Generic route: one full application per node.
    if (output_dim(op, d) != d) fail(Errc::dimension_mismatch, "fixed point needs output dim == input dim");
    for (std::size_t k = 0; k < nodes; ++k) {
      const PathEnsemble y = apply(op, alpha, driver);
      for (std::size_t m = 0; m < alpha.scenarios(); ++m) {
        for (std::size_t i = 0; i < d; ++i) alpha.at(m, k, i) = y.at(m, k, i);
      }
    }
    return alpha;
  }

  if (check_tree(op, d, start.grid(), driver.dim()) != d) {
    fail(Errc::dimension_mismatch, "fixed point needs output dim == input dim");
  }
  parallel_for(alpha.scenarios(), [&](std::size_t begin, std::size_t end, std::size_t) {
    ScenarioEngine engine(op, start.grid(), d, driver);
    for (std::size_t m = begin; m < end; ++m) {
      auto path = alpha.scenario(m);
      engine.bind(m, path);
      auto& top = engine.top();
      for (std::size_t k = 0; k < nodes; ++k) {
        const auto v = top.at(k);
        std::copy(v.begin(), v.end(), path.begin() + static_cast<std::ptrdiff_t>(k * d));
      }
    }
  });
  check_finite(alpha, op);
  return alpha;
}

}  // namespace apfx
