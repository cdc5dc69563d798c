#ifndef MGID_DIFFGRAPH_OPS_H_
#define MGID_DIFFGRAPH_OPS_H_

#include <limits>
#include <span>
#include <vector>

#include "mgid/diffgraph/graph.h"

namespace mgid::dg {

// Elementwise binary ops. Operands must have equal shapes, or one of them
// may be a 1x1 scalar, a 1xC row or an Rx1 column that is broadcast.
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Div(const Var& a, const Var& b);
// Elementwise minimum of equally shaped operands. Ties route to `a`.
Var Minimum(const Var& a, const Var& b);

Var Scale(const Var& a, double factor);
Var Neg(const Var& a);
Var AddScalar(const Var& a, double c);

Var MatMul(const Var& a, const Var& b);
Var Transpose(const Var& a);

Var Exp(const Var& a);
// Natural log of max(a, kLogFloor). Clamped entries have zero gradient and
// bump ThreadDiagnostics().log_clamps.
Var Log(const Var& a);
Var Tanh(const Var& a);
Var Sigmoid(const Var& a);
Var Relu(const Var& a);
Var Square(const Var& a);
// Gradient is 1 on [lo, hi] and exactly 0 strictly outside.
Var Clip(const Var& a, double lo, double hi);

Var SumAll(const Var& a);
// Rx C -> R x 1.
Var SumRows(const Var& a);
// R x C -> 1 x C.
Var SumCols(const Var& a);
// Row-wise max, R x C -> R x 1. Ties resolve to the lowest column, which
// receives the whole subgradient.
Var MaxRows(const Var& a);
Var MaxAll(const Var& a);
// Picks a(r, idx[r]) for every row: R x C -> R x 1.
Var Gather(const Var& a, std::span<const Index> idx);

Var ConcatRows(std::span<const Var> parts);
Var ConcatCols(std::span<const Var> parts);
Var SliceRows(const Var& a, Index begin, Index count);
Var SliceCols(const Var& a, Index begin, Index count);

// 0/1 constant; never differentiable.
Var Compare(const Var& a, const Var& b, CompareMode mode);

// Row-wise log-softmax, R x C -> R x C.
Var LogSoftmax(const Var& logits);
Var Softmax(const Var& logits);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace mgid::dg

#endif  // MGID_DIFFGRAPH_OPS_H_
