#include "mgid/diffgraph/ops.h"

#include <sstream>

#include "internal.h"

namespace mgid::dg {
namespace {

using internal::MakeOp;
using internal::OpAttrs;

std::string Shape(const Var& v) {
  std::ostringstream s;
  s << v.rows() << "x" << v.cols();
  return s.str();
}

void RequireDefined(const Var& v, const char* op) {
  if (!v.defined()) throw GraphError(std::string(op) + ": undefined operand");
}

Index BroadcastDim(Index a, Index b, const char* op, const Var& x,
                   const Var& y) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  throw GraphError(std::string(op) + ": shape mismatch " + Shape(x) + " vs " +
                   Shape(y));
}

Var BinaryOp(OpKind kind, const char* name, const Var& a, const Var& b,
             OpAttrs attrs = {}) {
  RequireDefined(a, name);
  RequireDefined(b, name);
  const Index rows = BroadcastDim(a.rows(), b.rows(), name, a, b);
  const Index cols = BroadcastDim(a.cols(), b.cols(), name, a, b);
  return MakeOp(kind, {a.node(), b.node()}, rows, cols, std::move(attrs));
}

Var UnaryOp(OpKind kind, const char* name, const Var& a, OpAttrs attrs = {}) {
  RequireDefined(a, name);
  return MakeOp(kind, {a.node()}, a.rows(), a.cols(), std::move(attrs));
}

}  // namespace

Var Add(const Var& a, const Var& b) { return BinaryOp(OpKind::kAdd, "add", a, b); }
Var Sub(const Var& a, const Var& b) { return BinaryOp(OpKind::kSub, "sub", a, b); }
Var Mul(const Var& a, const Var& b) { return BinaryOp(OpKind::kMul, "mul", a, b); }
Var Div(const Var& a, const Var& b) { return BinaryOp(OpKind::kDiv, "div", a, b); }

Var Minimum(const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw GraphError("minimum: shape mismatch " + Shape(a) + " vs " + Shape(b));
  }
  return BinaryOp(OpKind::kMinimum, "minimum", a, b);
}

Var Scale(const Var& a, double factor) {
  return UnaryOp(OpKind::kScale, "scale", a, {.a = factor});
}

Var Neg(const Var& a) { return Scale(a, -1.0); }

Var AddScalar(const Var& a, double c) { return Add(a, Scalar(c)); }

Var MatMul(const Var& a, const Var& b) {
  RequireDefined(a, "matmul");
  RequireDefined(b, "matmul");
  if (a.cols() != b.rows()) {
    throw GraphError("matmul: shape mismatch " + Shape(a) + " * " + Shape(b));
  }
  return MakeOp(OpKind::kMatMul, {a.node(), b.node()}, a.rows(), b.cols());
}

Var Transpose(const Var& a) {
  RequireDefined(a, "transpose");
  return MakeOp(OpKind::kTranspose, {a.node()}, a.cols(), a.rows());
}

Var Exp(const Var& a) { return UnaryOp(OpKind::kExp, "exp", a); }
Var Log(const Var& a) { return UnaryOp(OpKind::kLog, "log", a); }
Var Tanh(const Var& a) { return UnaryOp(OpKind::kTanh, "tanh", a); }
Var Sigmoid(const Var& a) { return UnaryOp(OpKind::kSigmoid, "sigmoid", a); }
Var Relu(const Var& a) { return UnaryOp(OpKind::kRelu, "relu", a); }
Var Square(const Var& a) { return Mul(a, a); }

Var Clip(const Var& a, double lo, double hi) {
  if (!(lo <= hi)) throw GraphError("clip: lo must not exceed hi");
  return UnaryOp(OpKind::kClip, "clip", a, {.a = lo, .b = hi});
}

Var SumAll(const Var& a) {
  RequireDefined(a, "sum_all");
  return MakeOp(OpKind::kSumAll, {a.node()}, 1, 1);
}

Var SumRows(const Var& a) {
  RequireDefined(a, "sum_rows");
  return MakeOp(OpKind::kSumRows, {a.node()}, a.rows(), 1);
}

Var SumCols(const Var& a) {
  RequireDefined(a, "sum_cols");
  return MakeOp(OpKind::kSumCols, {a.node()}, 1, a.cols());
}

Var MaxRows(const Var& a) {
  RequireDefined(a, "max_rows");
  if (a.cols() == 0) throw GraphError("max_rows: empty rows");
  return MakeOp(OpKind::kMaxRows, {a.node()}, a.rows(), 1);
}

Var MaxAll(const Var& a) {
  RequireDefined(a, "max_all");
  if (a.rows() * a.cols() == 0) throw GraphError("max_all: empty operand");
  return MakeOp(OpKind::kMaxAll, {a.node()}, 1, 1);
}

Var Gather(const Var& a, std::span<const Index> idx) {
  RequireDefined(a, "gather");
  if (static_cast<Index>(idx.size()) != a.rows()) {
    throw GraphError("gather: need one index per row of " + Shape(a));
  }
  for (Index i : idx) {
    if (i < 0 || i >= a.cols()) {
      throw GraphError("gather: index out of range for " + Shape(a));
    }
  }
  return MakeOp(OpKind::kGather, {a.node()}, a.rows(), 1,
                {.indices = std::vector<Index>(idx.begin(), idx.end())});
}

Var ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) throw GraphError("concat_rows: no parts");
  std::vector<NodePtr> nodes;
  Index rows = 0;
  for (const Var& p : parts) {
    RequireDefined(p, "concat_rows");
    if (p.cols() != parts[0].cols()) {
      throw GraphError("concat_rows: column mismatch " + Shape(p) + " vs " +
                       Shape(parts[0]));
    }
    rows += p.rows();
    nodes.push_back(p.node());
  }
  return MakeOp(OpKind::kConcatRows, std::move(nodes), rows, parts[0].cols());
}

Var ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) throw GraphError("concat_cols: no parts");
  std::vector<NodePtr> nodes;
  Index cols = 0;
  for (const Var& p : parts) {
    RequireDefined(p, "concat_cols");
    if (p.rows() != parts[0].rows()) {
      throw GraphError("concat_cols: row mismatch " + Shape(p) + " vs " +
                       Shape(parts[0]));
    }
    cols += p.cols();
    nodes.push_back(p.node());
  }
  return MakeOp(OpKind::kConcatCols, std::move(nodes), parts[0].rows(), cols);
}

Var SliceRows(const Var& a, Index begin, Index count) {
  RequireDefined(a, "slice_rows");
  if (begin < 0 || count < 0 || begin + count > a.rows()) {
    throw GraphError("slice_rows: range out of bounds for " + Shape(a));
  }
  return MakeOp(OpKind::kSliceRows, {a.node()}, count, a.cols(),
                {.a = static_cast<double>(begin)});
}

Var SliceCols(const Var& a, Index begin, Index count) {
  RequireDefined(a, "slice_cols");
  if (begin < 0 || count < 0 || begin + count > a.cols()) {
    throw GraphError("slice_cols: range out of bounds for " + Shape(a));
  }
  return MakeOp(OpKind::kSliceCols, {a.node()}, a.rows(), count,
                {.a = static_cast<double>(begin)});
}

Var Compare(const Var& a, const Var& b, CompareMode mode) {
  return BinaryOp(OpKind::kCompare, "compare", a, b,
                  {.a = static_cast<double>(static_cast<int>(mode))});
}

Var LogSoftmax(const Var& logits) {
  // The shift is a constant: log-softmax is invariant to it.
  Var shift = MaxRows(logits);
  if (shift.evaluated()) shift = StopGradient(shift);
  Var shifted = Sub(logits, shift);
  Var log_norm = Log(SumRows(Exp(shifted)));
  return Sub(shifted, log_norm);
}

Var Softmax(const Var& logits) { return Exp(LogSoftmax(logits)); }

}  // namespace mgid::dg
