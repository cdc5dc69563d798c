#include "mgid/designers/value_function.h"

#include "mgid/agents/learners.h"
#include "mgid/agents/trajectory.h"

namespace mgid::designers {

ValueFunction::ValueFunction(nets::MlpSpec spec, ValueConfig cfg)
    : net_(std::move(spec)), cfg_(cfg) {
  params_ = net_.InitParams();
  target_ = params_;
}

Eigen::VectorXd ValueFunction::Values(const Matrix& obs) const {
  return net_.LogitsValue(params_, obs).col(0);
}

Eigen::VectorXd ValueFunction::TargetValues(const Matrix& obs) const {
  return net_.LogitsValue(target_, obs).col(0);
}

Eigen::VectorXd ValueFunction::Advantages(
    const Matrix& obs, const Matrix& next_obs, const Eigen::VectorXd& rewards,
    std::span<const std::uint8_t> dones) const {
  const Eigen::VectorXd v = Values(obs);
  const Eigen::VectorXd vn = TargetValues(next_obs);
  Eigen::VectorXd delta(rewards.size());
  for (Eigen::Index t = 0; t < rewards.size(); ++t) {
    delta(t) = rewards(t) + (dones[t] ? 0.0 : cfg_.gamma * vn(t)) - v(t);
  }
  return agents::GaeValue(delta, dones, cfg_.gamma, cfg_.lambda);
}

double ValueFunction::Train(const Matrix& obs, const Matrix& next_obs,
                            const Eigen::VectorXd& rewards,
                            std::span<const std::uint8_t> dones,
                            double normalizer) {
  const Eigen::VectorXd targets =
      Advantages(obs, next_obs, rewards, dones) + Values(obs);
  agents::CriticFit fit = agents::FitValue(net_, params_, obs, targets, cfg_.lr,
                                           normalizer, &adam_);
  params_ = std::move(fit.params);
  target_ = agents::BlendTarget(params_, target_, cfg_.target_rate);
  return fit.loss;
}

void ValueFunction::set_params(std::vector<Matrix> params,
                               std::vector<Matrix> target) {
  params_ = std::move(params);
  target_ = std::move(target);
}

}  // namespace mgid::designers
