#include "mgid/diffgraph/autodiff.h"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "internal.h"
#include "mgid/diffgraph/ops.h"

namespace mgid::dg {
namespace {

// Reduces a broadcast gradient back to the operand's shape.
Var SumTo(const Var& g, Index rows, Index cols) {
  Var out = g;
  if (rows == 1 && out.rows() != 1) out = SumCols(out);
  if (cols == 1 && out.cols() != 1) out = SumRows(out);
  return out;
}

Var SumToParent(const Var& g, const NodePtr& parent) {
  return SumTo(g, parent->rows, parent->cols);
}

Var OneHot(Index rows, Index cols, const std::vector<Index>& idx) {
  Matrix m = Matrix::Zero(rows, cols);
  for (Index r = 0; r < rows; ++r) m(r, idx[static_cast<size_t>(r)]) = 1.0;
  return Constant(std::move(m));
}

Var Mask(const NodePtr& x, double lo, double hi) {
  const Matrix& v = x->value;
  return Constant(
      ((v.array() >= lo) && (v.array() <= hi)).cast<double>().matrix());
}

// Gradients of the node's output w.r.t. each parent, given upstream g.
// Entries for parents that do not require grad are left undefined.
std::vector<Var> Vjp(const NodePtr& node, const Var& g) {
  const auto& p = node->parents;
  std::vector<Var> out(p.size());
  auto want = [&](size_t i) { return p[i]->requires_grad; };
  const Var self(node);

  switch (node->kind) {
    case OpKind::kLeaf:
    case OpKind::kConstant:
    case OpKind::kCompare:
      break;
    case OpKind::kAdd:
      if (want(0)) out[0] = SumToParent(g, p[0]);
      if (want(1)) out[1] = SumToParent(g, p[1]);
      break;
    case OpKind::kSub:
      if (want(0)) out[0] = SumToParent(g, p[0]);
      if (want(1)) out[1] = Neg(SumToParent(g, p[1]));
      break;
    case OpKind::kMul:
      if (want(0)) out[0] = SumToParent(Mul(g, Var(p[1])), p[0]);
      if (want(1)) out[1] = SumToParent(Mul(g, Var(p[0])), p[1]);
      break;
    case OpKind::kDiv:
      if (want(0)) out[0] = SumToParent(Div(g, Var(p[1])), p[0]);
      if (want(1)) out[1] = SumToParent(Neg(Div(Mul(g, self), Var(p[1]))), p[1]);
      break;
    case OpKind::kMinimum: {
      const Var a_wins = Compare(Var(p[0]), Var(p[1]), CompareMode::kLessEqual);
      if (want(0)) out[0] = Mul(g, a_wins);
      if (want(1)) out[1] = Mul(g, Sub(Scalar(1.0), a_wins));
      break;
    }
    case OpKind::kScale:
      out[0] = Scale(g, node->attr_a);
      break;
    case OpKind::kMatMul:
      if (want(0)) out[0] = MatMul(g, Transpose(Var(p[1])));
      if (want(1)) out[1] = MatMul(Transpose(Var(p[0])), g);
      break;
    case OpKind::kTranspose:
      out[0] = Transpose(g);
      break;
    case OpKind::kExp:
      out[0] = Mul(g, self);
      break;
    case OpKind::kLog: {
      const Var x(p[0]);
      const Var inside = Mask(p[0], kLogFloor, kInf);
      out[0] = Mul(g, Div(inside, Clip(x, kLogFloor, kInf)));
      break;
    }
    case OpKind::kTanh:
      out[0] = Mul(g, Sub(Scalar(1.0), Mul(self, self)));
      break;
    case OpKind::kSigmoid:
      out[0] = Mul(g, Mul(self, Sub(Scalar(1.0), self)));
      break;
    case OpKind::kRelu:
      out[0] = Mul(g, Compare(Var(p[0]), Scalar(0.0), CompareMode::kGreater));
      break;
    case OpKind::kClip:
      out[0] = Mul(g, Mask(p[0], node->attr_a, node->attr_b));
      break;
    case OpKind::kSumAll:
    case OpKind::kSumRows:
    case OpKind::kSumCols:
      out[0] = Mul(Ones(p[0]->rows, p[0]->cols), g);
      break;
    case OpKind::kMaxRows:
      out[0] = Mul(OneHot(p[0]->rows, p[0]->cols,
                          internal::RowArgMax(p[0]->value)),
                   g);
      break;
    case OpKind::kMaxAll: {
      const Matrix& v = p[0]->value;
      Matrix m = Matrix::Zero(v.rows(), v.cols());
      // Column-major scan: first occurrence of the maximum.
      Index best = 0;
      for (Index i = 1; i < v.size(); ++i) {
        if (v.data()[i] > v.data()[best]) best = i;
      }
      m.data()[best] = 1.0;
      out[0] = Mul(Constant(std::move(m)), g);
      break;
    }
    case OpKind::kGather:
      out[0] = Mul(OneHot(p[0]->rows, p[0]->cols, node->indices), g);
      break;
    case OpKind::kConcatRows: {
      Index offset = 0;
      for (size_t i = 0; i < p.size(); ++i) {
        if (want(i)) out[i] = SliceRows(g, offset, p[i]->rows);
        offset += p[i]->rows;
      }
      break;
    }
    case OpKind::kConcatCols: {
      Index offset = 0;
      for (size_t i = 0; i < p.size(); ++i) {
        if (want(i)) out[i] = SliceCols(g, offset, p[i]->cols);
        offset += p[i]->cols;
      }
      break;
    }
    case OpKind::kSliceRows: {
      const Index begin = static_cast<Index>(node->attr_a);
      const Index after = p[0]->rows - begin - node->rows;
      std::vector<Var> parts;
      if (begin > 0) parts.push_back(Zeros(begin, node->cols));
      parts.push_back(g);
      if (after > 0) parts.push_back(Zeros(after, node->cols));
      out[0] = parts.size() == 1 ? g : ConcatRows(parts);
      break;
    }
    case OpKind::kSliceCols: {
      const Index begin = static_cast<Index>(node->attr_a);
      const Index after = p[0]->cols - begin - node->cols;
      std::vector<Var> parts;
      if (begin > 0) parts.push_back(Zeros(node->rows, begin));
      parts.push_back(g);
      if (after > 0) parts.push_back(Zeros(node->rows, after));
      out[0] = parts.size() == 1 ? g : ConcatCols(parts);
      break;
    }
  }
  return out;
}

// Post-order (parents first) over nodes reachable from the roots. When
// grad_only is set, traversal only follows nodes that require grad.
std::vector<NodePtr> TopoOrder(std::span<const Var> roots, bool grad_only) {
  std::vector<NodePtr> order;
  std::unordered_set<const Node*> visited;
  std::vector<std::pair<NodePtr, size_t>> stack;
  for (const Var& root : roots) {
    if (!root.defined()) continue;
    if (grad_only && !root.requires_grad()) continue;
    if (!visited.insert(root.get()).second) continue;
    stack.emplace_back(root.node(), 0);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        const NodePtr parent = node->parents[next++];
        if (grad_only && !parent->requires_grad) continue;
        if (visited.insert(parent.get()).second) stack.emplace_back(parent, 0);
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }
  return order;
}

}  // namespace

Bindings& Bindings::Bind(const Var& leaf, Matrix value) {
  if (!leaf.defined() || leaf.kind() != OpKind::kLeaf) {
    throw GraphError("can only bind leaf nodes");
  }
  if (value.rows() != leaf.rows() || value.cols() != leaf.cols()) {
    throw GraphError("binding shape mismatch for leaf " + leaf.name());
  }
  for (auto& [node, v] : entries_) {
    if (node == leaf.get()) {
      v = std::move(value);
      return *this;
    }
  }
  entries_.emplace_back(leaf.get(), std::move(value));
  return *this;
}

const Matrix* Bindings::Find(const Node* leaf) const {
  for (const auto& [node, v] : entries_) {
    if (node == leaf) return &v;
  }
  return nullptr;
}

void Forward(std::span<const Var> outputs, const Bindings& bindings) {
  for (const NodePtr& node : TopoOrder(outputs, /*grad_only=*/false)) {
    switch (node->kind) {
      case OpKind::kLeaf: {
        if (const Matrix* bound = bindings.Find(node.get())) {
          node->value = *bound;
          node->evaluated = true;
        } else if (!node->evaluated) {
          throw GraphError("unbound leaf: " + node->name);
        }
        break;
      }
      case OpKind::kConstant:
        break;
      default:
        node->value = internal::Evaluate(*node);
        node->evaluated = true;
        break;
    }
  }
}

Matrix Forward(const Var& output, const Bindings& bindings) {
  const Var outputs[] = {output};
  Forward(outputs, bindings);
  return output.value();
}

std::vector<Var> Grad(const Var& output, std::span<const Var> wrt,
                      GradOptions options) {
  if (!output.defined()) throw GraphError("grad: undefined output");
  if (output.rows() != 1 || output.cols() != 1) {
    throw GraphError("grad: output must be scalar, got " +
                     std::to_string(output.rows()) + "x" +
                     std::to_string(output.cols()));
  }
  if (!output.evaluated()) throw GraphError("grad: output not evaluated");

  const Var roots[] = {output};
  const std::vector<NodePtr> order = TopoOrder(roots, /*grad_only=*/true);
  std::unordered_set<const Node*> reachable;
  for (const NodePtr& n : order) reachable.insert(n.get());
  for (const Var& w : wrt) {
    if (!w.defined()) throw GraphError("grad: undefined parameter");
    if (!reachable.contains(w.get()) && !options.allow_unused) {
      throw GraphError("grad: parameter '" + w.name() +
                       "' is not reachable from the output");
    }
  }

  EnableGradGuard mode(options.create_graph);
  std::unordered_map<const Node*, Var> grads;
  grads.emplace(output.get(), Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodePtr& node = *it;
    if (node->kind == OpKind::kLeaf) continue;
    auto found = grads.find(node.get());
    if (found == grads.end()) continue;
    const Var g = found->second;
    std::vector<Var> parent_grads = Vjp(node, g);
    for (size_t i = 0; i < parent_grads.size(); ++i) {
      if (!parent_grads[i].defined()) continue;
      const Node* parent = node->parents[i].get();
      auto [slot, inserted] = grads.try_emplace(parent, parent_grads[i]);
      if (!inserted) slot->second = Add(slot->second, parent_grads[i]);
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    auto found = grads.find(w.get());
    result.push_back(found != grads.end() ? found->second
                                          : Zeros(w.rows(), w.cols()));
  }
  return result;
}

std::vector<Var> GradThroughUpdate(const Var& outer, std::span<const Var> eta) {
  try {
    return Grad(outer, eta);
  } catch (const GraphError& e) {
    throw GraphError(
        std::string("outer objective does not depend on designer parameters "
                    "(was the agent update built with create_graph?): ") +
        e.what());
  }
}

std::vector<Matrix> Values(std::span<const Var> vars) {
  std::vector<Matrix> out;
  out.reserve(vars.size());
  for (const Var& v : vars) out.push_back(v.value());
  return out;
}

}  // namespace mgid::dg
