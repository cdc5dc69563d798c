#include "mgid/designers/incentive.h"

#include <stdexcept>

#include "mgid/diffgraph/ops.h"

namespace mgid::designers {

IncentiveFunction::IncentiveFunction(nets::MlpSpec spec) : net_(spec) {
  if (spec.head != nets::HeadKind::kScaledSigmoid) {
    throw std::invalid_argument("incentive function needs a scaled-sigmoid head");
  }
}

nets::ParamBlock IncentiveFunction::CreateParams(const std::string& prefix) const {
  return nets::ParamBlock::Create(prefix, dg::ParamRole::kDesigner, net_);
}

dg::Var IncentiveFunction::Forward(std::span<const dg::Var> eta,
                                   const Matrix& input) const {
  return net_.Forward(eta, dg::Constant(input));
}

Matrix IncentiveFunction::Value(std::span<const Matrix> eta,
                                const Matrix& input) const {
  return net_.ForwardValue(eta, input);
}

}  // namespace mgid::designers
