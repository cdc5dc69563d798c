#ifndef MGID_SRC_DIFFGRAPH_INTERNAL_H_
#define MGID_SRC_DIFFGRAPH_INTERNAL_H_

#include <initializer_list>
#include <vector>

#include "mgid/diffgraph/graph.h"

namespace mgid::dg::internal {

struct OpAttrs {
  double a = 0.0;
  double b = 0.0;
  std::vector<Index> indices;
};

// Builds an op node with the given (already validated) output shape. The
// value is computed immediately when every parent is evaluated.
Var MakeOp(OpKind kind, std::vector<NodePtr> parents, Index rows, Index cols,
           OpAttrs attrs = {});

// Computes node.value from its parents' values.
Matrix Evaluate(const Node& node);

// Column index of the first maximum in every row.
std::vector<Index> RowArgMax(const Matrix& m);

}  // namespace mgid::dg::internal

#endif  // MGID_SRC_DIFFGRAPH_INTERNAL_H_
