#ifndef MGID_NETS_POLICY_H_
#define MGID_NETS_POLICY_H_

#include <span>
#include <vector>

#include "mgid/core/random.h"
#include "mgid/diffgraph/graph.h"

namespace mgid::nets {

using dg::Matrix;

// Log-probabilities of the exploration-mixed policy
// (1 - eps) * softmax(logits) + eps / |A|, row-wise.
dg::Var MixedLogProbs(const dg::Var& logits, double eps);

// Log-probability of the taken action in every row.
dg::Var ActionLogProbs(const dg::Var& logits, std::span<const int> actions,
                       double eps);

// Row-wise entropy of softmax(logits).
dg::Var Entropy(const dg::Var& logits);

Eigen::RowVectorXd SoftmaxRow(const Eigen::RowVectorXd& logits);
Eigen::RowVectorXd MixPolicy(const Eigen::RowVectorXd& probs, double eps);

// Draws from the mixed policy built from `probs`. Throws
// std::invalid_argument when eps is outside [0, 1].
int SampleAction(const Eigen::RowVectorXd& probs, Rng& rng, double eps);

// Samples an index from an arbitrary probability row.
int SampleCategorical(const Eigen::RowVectorXd& probs, Rng& rng);

// Exploration rate that moves linearly from `start` to `end` over
// `episodes` episodes and then stays at `end`.
struct LinearDecay {
  double start = 0.0;
  double end = 0.0;
  double episodes = 1.0;

  double At(double episode) const;
};

}  // namespace mgid::nets

#endif  // MGID_NETS_POLICY_H_
