#ifndef MGID_AGENTS_OPTIMIZER_H_
#define MGID_AGENTS_OPTIMIZER_H_

#include <span>
#include <vector>

#include "mgid/diffgraph/graph.h"

namespace mgid::agents {

using dg::Matrix;

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
};

// Scales gradients to global norm `max_norm` when larger; 0 disables. The
// factor is computed from values and treated as a constant.
std::vector<dg::Var> ClipByGlobalNorm(std::span<const dg::Var> grads,
                                      double max_norm);

// params + sign * lr * grads, or the Adam step when `adam` is set. Under
// Adam the first moment is linear in the (possibly graph-linked) gradient
// while the second moment comes from values only, so the step direction
// keeps its dependence on upstream parameters and the adaptive scale is a
// constant. The optimizer state is advanced with the gradient values.
std::vector<dg::Var> ApplyStep(std::span<const dg::Var> params,
                               std::span<const dg::Var> grads, double lr,
                               double sign, AdamState* adam,
                               const AdamConfig& cfg = {});

// Plain-value Adam used for designer parameters. `sign` = +1 ascends.
void AdamUpdate(std::vector<Matrix>& params, std::span<const Matrix> grads,
                double lr, double sign, AdamState& state,
                const AdamConfig& cfg = {});

// params + sign * lr * grads on values.
void SgdUpdate(std::vector<Matrix>& params, std::span<const Matrix> grads,
               double lr, double sign);

}  // namespace mgid::agents

#endif  // MGID_AGENTS_OPTIMIZER_H_
