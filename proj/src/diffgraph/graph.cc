#include "mgid/diffgraph/graph.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "internal.h"

namespace mgid::dg {
namespace {

thread_local bool grad_mode_enabled = true;
thread_local Diagnostics diagnostics;

NodePtr MakeLeafNode(OpKind kind, std::string name, Index rows, Index cols) {
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->rows = rows;
  node->cols = cols;
  node->name = std::move(name);
  return node;
}

Matrix Expand(const Matrix& m, Index rows, Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  if (m.rows() == 1 && m.cols() == 1) return Matrix::Constant(rows, cols, m(0, 0));
  if (m.rows() == 1) return m.replicate(rows, 1);
  return m.replicate(1, cols);
}

template <typename F>
Matrix Binary(const Node& node, F f) {
  const Matrix& a = node.parents[0]->value;
  const Matrix& b = node.parents[1]->value;
  if (a.rows() == node.rows && a.cols() == node.cols && b.rows() == node.rows &&
      b.cols() == node.cols) {
    return f(a.array(), b.array()).matrix();
  }
  const Matrix ea = Expand(a, node.rows, node.cols);
  const Matrix eb = Expand(b, node.rows, node.cols);
  return f(ea.array(), eb.array()).matrix();
}

}  // namespace

const char* OpName(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kConstant: return "constant";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kScale: return "scale";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kRelu: return "relu";
    case OpKind::kClip: return "clip";
    case OpKind::kMinimum: return "minimum";
    case OpKind::kSumAll: return "sum_all";
    case OpKind::kSumRows: return "sum_rows";
    case OpKind::kSumCols: return "sum_cols";
    case OpKind::kMaxRows: return "max_rows";
    case OpKind::kMaxAll: return "max_all";
    case OpKind::kGather: return "gather";
    case OpKind::kConcatRows: return "concat_rows";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kSliceRows: return "slice_rows";
    case OpKind::kSliceCols: return "slice_cols";
    case OpKind::kCompare: return "compare";
  }
  return "unknown";
}

const Matrix& Var::value() const {
  if (!node_) throw GraphError("value() on undefined var");
  if (!node_->evaluated) {
    throw GraphError(std::string("node '") + OpName(node_->kind) + "' " +
                     node_->name + " has not been evaluated");
  }
  return node_->value;
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    std::ostringstream msg;
    msg << "scalar() on " << v.rows() << "x" << v.cols() << " node";
    throw GraphError(msg.str());
  }
  return v(0, 0);
}

void Var::set_value(const Matrix& v) {
  if (node_->kind != OpKind::kLeaf && node_->kind != OpKind::kConstant) {
    throw GraphError("set_value() on a non-leaf node");
  }
  if (v.rows() != node_->rows || v.cols() != node_->cols) {
    throw GraphError("set_value() shape mismatch for " + node_->name);
  }
  node_->value = v;
  node_->evaluated = true;
}

Var Constant(Matrix value) {
  auto node = MakeLeafNode(OpKind::kConstant, "", value.rows(), value.cols());
  node->value = std::move(value);
  node->evaluated = true;
  return Var(std::move(node));
}

Var Scalar(double value) { return Constant(Matrix::Constant(1, 1, value)); }
Var Zeros(Index rows, Index cols) { return Constant(Matrix::Zero(rows, cols)); }
Var Ones(Index rows, Index cols) { return Constant(Matrix::Ones(rows, cols)); }

Var Leaf(std::string name, Matrix value) {
  auto node = MakeLeafNode(OpKind::kLeaf, std::move(name), value.rows(),
                           value.cols());
  node->value = std::move(value);
  node->evaluated = true;
  node->requires_grad = true;
  node->rebindable = true;
  return Var(std::move(node));
}

Var Placeholder(std::string name, Index rows, Index cols, bool requires_grad) {
  auto node = MakeLeafNode(OpKind::kLeaf, std::move(name), rows, cols);
  node->requires_grad = requires_grad;
  node->rebindable = true;
  return Var(std::move(node));
}

Var StopGradient(const Var& v) { return Constant(v.value()); }

bool GradMode::enabled() { return grad_mode_enabled; }
void GradMode::set_enabled(bool on) { grad_mode_enabled = on; }

Diagnostics& ThreadDiagnostics() { return diagnostics; }
void ResetDiagnostics() { diagnostics = Diagnostics{}; }

const char* RoleName(ParamRole role) {
  switch (role) {
    case ParamRole::kAgentPolicy: return "agent_policy";
    case ParamRole::kAgentCritic: return "agent_critic";
    case ParamRole::kDesigner: return "designer";
    case ParamRole::kDesignerCritic: return "designer_critic";
  }
  return "unknown";
}

Parameter ParameterStore::Add(std::string id, ParamRole role, Matrix value) {
  if (Contains(id)) throw GraphError("duplicate parameter id: " + id);
  Var var = Leaf(id, std::move(value));
  params_.push_back(Parameter{std::move(id), role, var});
  return params_.back();
}

Parameter ParameterStore::Get(const std::string& id) const {
  for (const Parameter& p : params_) {
    if (p.id == id) return p;
  }
  throw GraphError("unknown parameter id: " + id);
}

bool ParameterStore::Contains(const std::string& id) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Parameter& p) { return p.id == id; });
}

namespace internal {

std::vector<Index> RowArgMax(const Matrix& m) {
  std::vector<Index> out(static_cast<size_t>(m.rows()), 0);
  for (Index r = 0; r < m.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < m.cols(); ++c) {
      if (m(r, c) > m(r, best)) best = c;
    }
    out[static_cast<size_t>(r)] = best;
  }
  return out;
}

Var MakeOp(OpKind kind, std::vector<NodePtr> parents, Index rows, Index cols,
           OpAttrs attrs) {
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->rows = rows;
  node->cols = cols;
  node->attr_a = attrs.a;
  node->attr_b = attrs.b;
  node->indices = std::move(attrs.indices);

  bool any_grad = false;
  bool all_evaluated = true;
  for (const NodePtr& p : parents) {
    any_grad = any_grad || p->requires_grad;
    all_evaluated = all_evaluated && p->evaluated;
    node->rebindable = node->rebindable || p->rebindable;
  }
  node->requires_grad =
      kind != OpKind::kCompare && any_grad && GradMode::enabled();
  node->parents = std::move(parents);
  if (all_evaluated) {
    node->value = Evaluate(*node);
    node->evaluated = true;
  }
  if (!node->requires_grad && !node->rebindable && node->evaluated) {
    // Nothing can ever flow through this node again.
    node->parents.clear();
    node->kind = OpKind::kConstant;
    node->indices.clear();
  }
  return Var(std::move(node));
}

Matrix Evaluate(const Node& node) {
  const auto& p = node.parents;
  switch (node.kind) {
    case OpKind::kLeaf:
    case OpKind::kConstant:
      return node.value;
    case OpKind::kAdd:
      return Binary(node, [](const auto& a, const auto& b) { return a + b; });
    case OpKind::kSub:
      return Binary(node, [](const auto& a, const auto& b) { return a - b; });
    case OpKind::kMul:
      return Binary(node, [](const auto& a, const auto& b) { return a * b; });
    case OpKind::kDiv:
      return Binary(node, [](const auto& a, const auto& b) { return a / b; });
    case OpKind::kMinimum:
      return Binary(node,
                    [](const auto& a, const auto& b) { return a.min(b); });
    case OpKind::kScale:
      return p[0]->value * node.attr_a;
    case OpKind::kMatMul:
      return p[0]->value * p[1]->value;
    case OpKind::kTranspose:
      return p[0]->value.transpose();
    case OpKind::kExp:
      return p[0]->value.array().exp().matrix();
    case OpKind::kLog: {
      const Matrix& x = p[0]->value;
      Matrix out(x.rows(), x.cols());
      std::int64_t clamps = 0;
      for (Index i = 0; i < x.size(); ++i) {
        double v = x.data()[i];
        if (!(v >= kLogFloor)) {
          ++clamps;
          v = kLogFloor;
        }
        out.data()[i] = std::log(v);
      }
      ThreadDiagnostics().log_clamps += clamps;
      return out;
    }
    case OpKind::kTanh:
      return p[0]->value.array().tanh().matrix();
    case OpKind::kSigmoid:
      return (1.0 / (1.0 + (-p[0]->value.array()).exp())).matrix();
    case OpKind::kRelu:
      return p[0]->value.array().max(0.0).matrix();
    case OpKind::kClip:
      return p[0]->value.array().max(node.attr_a).min(node.attr_b).matrix();
    case OpKind::kSumAll:
      return Matrix::Constant(1, 1, p[0]->value.sum());
    case OpKind::kSumRows:
      return p[0]->value.rowwise().sum();
    case OpKind::kSumCols:
      return p[0]->value.colwise().sum();
    case OpKind::kMaxRows: {
      const Matrix& x = p[0]->value;
      const std::vector<Index> arg = RowArgMax(x);
      Matrix out(x.rows(), 1);
      for (Index r = 0; r < x.rows(); ++r) out(r, 0) = x(r, arg[r]);
      return out;
    }
    case OpKind::kMaxAll:
      return Matrix::Constant(1, 1, p[0]->value.maxCoeff());
    case OpKind::kGather: {
      const Matrix& x = p[0]->value;
      Matrix out(x.rows(), 1);
      for (Index r = 0; r < x.rows(); ++r) out(r, 0) = x(r, node.indices[r]);
      return out;
    }
    case OpKind::kConcatRows: {
      Matrix out(node.rows, node.cols);
      Index offset = 0;
      for (const NodePtr& part : p) {
        out.middleRows(offset, part->rows) = part->value;
        offset += part->rows;
      }
      return out;
    }
    case OpKind::kConcatCols: {
      Matrix out(node.rows, node.cols);
      Index offset = 0;
      for (const NodePtr& part : p) {
        out.middleCols(offset, part->cols) = part->value;
        offset += part->cols;
      }
      return out;
    }
    case OpKind::kSliceRows:
      return p[0]->value.middleRows(static_cast<Index>(node.attr_a), node.rows);
    case OpKind::kSliceCols:
      return p[0]->value.middleCols(static_cast<Index>(node.attr_a), node.cols);
    case OpKind::kCompare: {
      const auto mode = static_cast<CompareMode>(static_cast<int>(node.attr_a));
      return Binary(node, [mode](const auto& a, const auto& b) {
        switch (mode) {
          case CompareMode::kGreater: return (a > b).template cast<double>().eval();
          case CompareMode::kGreaterEqual: return (a >= b).template cast<double>().eval();
          case CompareMode::kLess: return (a < b).template cast<double>().eval();
          case CompareMode::kLessEqual: return (a <= b).template cast<double>().eval();
          case CompareMode::kEqual: break;
        }
        return (a == b).template cast<double>().eval();
      });
    }
  }
  throw GraphError("cannot evaluate op");
}

}  // namespace internal
}  // namespace mgid::dg
