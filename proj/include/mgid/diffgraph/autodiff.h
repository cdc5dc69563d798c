#ifndef MGID_DIFFGRAPH_AUTODIFF_H_
#define MGID_DIFFGRAPH_AUTODIFF_H_

#include <span>
#include <utility>
#include <vector>

#include "mgid/diffgraph/graph.h"

namespace mgid::dg {

// Values for rebindable leaves, consumed by Forward().
class Bindings {
 public:
  Bindings& Bind(const Var& leaf, Matrix value);
  const Matrix* Find(const Node* leaf) const;

 private:
  std::vector<std::pair<const Node*, Matrix>> entries_;
};

// Re-evaluates every node reachable from `outputs` in topological order
// using the bound leaf values (leaves without a binding keep their current
// value). Throws GraphError for an unbound leaf or a shape mismatch.
void Forward(std::span<const Var> outputs, const Bindings& bindings);
Matrix Forward(const Var& output, const Bindings& bindings);

struct GradOptions {
  // Record the backward pass so the returned gradients can themselves be
  // differentiated.
  bool create_graph = false;
  // Return zeros instead of throwing for parameters the output does not
  // depend on.
  bool allow_unused = false;
};

// d output / d p for every p in wrt. `output` must be 1x1.
std::vector<Var> Grad(const Var& output, std::span<const Var> wrt,
                      GradOptions options = {});

// Gradient of an outer objective w.r.t. designer parameters, where the
// objective was built on top of parameters updated with create_graph so it
// still depends on `eta` through the update. Throws GraphError if that
// dependence was severed.
std::vector<Var> GradThroughUpdate(const Var& outer,
                                   std::span<const Var> eta);

// Values of a list of vars.
std::vector<Matrix> Values(std::span<const Var> vars);

}  // namespace mgid::dg

#endif  // MGID_DIFFGRAPH_AUTODIFF_H_
