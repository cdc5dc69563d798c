#include "mgid/nets/policy.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mgid/diffgraph/ops.h"

namespace mgid::nets {

dg::Var MixedLogProbs(const dg::Var& logits, double eps) {
  if (eps < 0.0 || eps > 1.0) {
    throw std::invalid_argument("exploration eps must lie in [0, 1]");
  }
  if (eps == 0.0) return dg::LogSoftmax(logits);
  const double uniform = eps / static_cast<double>(logits.cols());
  return dg::Log(
      dg::AddScalar(dg::Scale(dg::Softmax(logits), 1.0 - eps), uniform));
}

dg::Var ActionLogProbs(const dg::Var& logits, std::span<const int> actions,
                       double eps) {
  std::vector<dg::Index> idx(actions.begin(), actions.end());
  return dg::Gather(MixedLogProbs(logits, eps), idx);
}

dg::Var Entropy(const dg::Var& logits) {
  dg::Var logp = dg::LogSoftmax(logits);
  return dg::Neg(dg::SumRows(dg::Mul(dg::Exp(logp), logp)));
}

Eigen::RowVectorXd SoftmaxRow(const Eigen::RowVectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::RowVectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

Eigen::RowVectorXd MixPolicy(const Eigen::RowVectorXd& probs, double eps) {
  if (eps < 0.0 || eps > 1.0) {
    throw std::invalid_argument("exploration eps must lie in [0, 1]");
  }
  if (eps == 0.0) return probs;
  return ((1.0 - eps) * probs.array() +
          eps / static_cast<double>(probs.size()))
      .matrix();
}

int SampleCategorical(const Eigen::RowVectorXd& probs, Rng& rng) {
  const double u = Uniform01(rng) * probs.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<int>(i);
  }
  // Rounding: fall back to the last action with positive mass.
  for (Eigen::Index i = probs.size() - 1; i >= 0; --i) {
    if (probs(i) > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

int SampleAction(const Eigen::RowVectorXd& probs, Rng& rng, double eps) {
  return SampleCategorical(MixPolicy(probs, eps), rng);
}

double LinearDecay::At(double episode) const {
  if (episodes <= 0.0) return end;
  const double frac = std::clamp(episode / episodes, 0.0, 1.0);
  return start + (end - start) * frac;
}

}  // namespace mgid::nets
