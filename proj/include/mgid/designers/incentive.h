#ifndef MGID_DESIGNERS_INCENTIVE_H_
#define MGID_DESIGNERS_INCENTIVE_H_

#include <span>

#include "mgid/nets/mlp.h"

namespace mgid::designers {

using dg::Matrix;

// mu_eta: (state features ++ joint action features) -> bounded vector.
class IncentiveFunction {
 public:
  // spec.head must be kScaledSigmoid.
  explicit IncentiveFunction(nets::MlpSpec spec);

  const nets::Mlp& net() const { return net_; }
  double lo() const { return net_.spec().lo; }
  double hi() const { return net_.spec().hi; }
  int input_size() const { return net_.input_size(); }
  int output_size() const { return net_.output_size(); }

  nets::ParamBlock CreateParams(const std::string& prefix = "designer") const;

  // One output row per input row, strictly inside (lo, hi).
  dg::Var Forward(std::span<const dg::Var> eta, const Matrix& input) const;
  Matrix Value(std::span<const Matrix> eta, const Matrix& input) const;

 private:
  nets::Mlp net_;
};

}  // namespace mgid::designers

#endif  // MGID_DESIGNERS_INCENTIVE_H_
