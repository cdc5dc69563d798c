#ifndef MGID_DESIGNERS_VALUE_FUNCTION_H_
#define MGID_DESIGNERS_VALUE_FUNCTION_H_

#include <cstdint>
#include <span>
#include <vector>

#include "mgid/agents/optimizer.h"
#include "mgid/nets/mlp.h"

namespace mgid::designers {

using dg::Matrix;

struct ValueConfig {
  double lr = 1e-3;
  double target_rate = 1.0;  // c_v
  double gamma = 0.99;
  double lambda = 0.95;
};

// State-value critic of a designer with a target copy for bootstrapping.
class ValueFunction {
 public:
  ValueFunction(nets::MlpSpec spec, ValueConfig cfg);

  Eigen::VectorXd Values(const Matrix& obs) const;
  Eigen::VectorXd TargetValues(const Matrix& obs) const;

  // GAE advantages with delta_t = r_t + gamma V'(s_{t+1}) - V(s_t), V' = 0
  // after the last step of an episode.
  Eigen::VectorXd Advantages(const Matrix& obs, const Matrix& next_obs,
                             const Eigen::VectorXd& rewards,
                             std::span<const std::uint8_t> dones) const;

  // One Adam step toward advantage + V on the given batch, then the target
  // update. Returns the regression loss.
  double Train(const Matrix& obs, const Matrix& next_obs,
               const Eigen::VectorXd& rewards,
               std::span<const std::uint8_t> dones, double normalizer);

  const std::vector<Matrix>& params() const { return params_; }
  const std::vector<Matrix>& target() const { return target_; }
  void set_params(std::vector<Matrix> params, std::vector<Matrix> target);
  const nets::Mlp& net() const { return net_; }
  const ValueConfig& config() const { return cfg_; }

 private:
  nets::Mlp net_;
  ValueConfig cfg_;
  std::vector<Matrix> params_;
  std::vector<Matrix> target_;
  agents::AdamState adam_;
};

}  // namespace mgid::designers

#endif  // MGID_DESIGNERS_VALUE_FUNCTION_H_
