#include "mgid/designers/dual_rl.h"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mgid/agents/trajectory.h"
#include "mgid/diffgraph/autodiff.h"
#include "mgid/diffgraph/ops.h"
#include "mgid/nets/policy.h"

namespace mgid::designers {
namespace {

DualRlStats PolicyGradientStep(const dg::Var& logp, const dg::Var& entropy,
                               const Eigen::VectorXd& adv, double episodes,
                               const DualRlConfig& cfg,
                               nets::ParamBlock& params,
                               agents::AdamState& adam) {
  dg::Var obj = dg::SumAll(dg::Mul(logp, dg::Constant(Matrix(adv))));
  if (entropy.defined() && cfg.entropy_coef != 0.0) {
    obj = dg::Add(obj, dg::Scale(dg::SumAll(entropy), cfg.entropy_coef));
  }
  obj = dg::Scale(obj, 1.0 / episodes);
  DualRlStats stats;
  stats.objective = obj.scalar();
  if (!std::isfinite(stats.objective)) {
    throw std::runtime_error("dual-RL designer: non-finite objective");
  }
  std::vector<Matrix> g =
      dg::Values(dg::Grad(obj, params.vars, {.allow_unused = true}));
  std::vector<Matrix> values = params.values();
  agents::AdamUpdate(values, g, cfg.lr, 1.0, adam, cfg.adam);
  params.Assign(values);
  return stats;
}

}  // namespace

DiscreteIncentiveCodec::DiscreteIncentiveCodec(std::vector<double> values,
                                               int num_types, long cap)
    : values_(std::move(values)), num_types_(num_types) {
  if (values_.empty() || num_types_ < 1) {
    throw std::invalid_argument("incentive codec needs values and types");
  }
  size_ = 1;
  for (int i = 0; i < num_types_; ++i) {
    size_ *= static_cast<long>(values_.size());
    if (size_ > cap) {
      throw std::invalid_argument(
          "discrete designer action space exceeds the configured cap of " +
          std::to_string(cap));
    }
  }
}

std::vector<double> DiscreteIncentiveCodec::Decode(long index) const {
  if (index < 0 || index >= size_) {
    throw std::invalid_argument("incentive action index out of range");
  }
  const long base = static_cast<long>(values_.size());
  std::vector<double> out(num_types_);
  for (int k = num_types_ - 1; k >= 0; --k) {
    out[k] = values_[index % base];
    index /= base;
  }
  return out;
}

long DiscreteIncentiveCodec::Encode(std::span<const int> digits) const {
  if (static_cast<int>(digits.size()) != num_types_) {
    throw std::invalid_argument("incentive codec: wrong digit count");
  }
  long index = 0;
  for (int d : digits) index = index * static_cast<long>(values_.size()) + d;
  return index;
}

void DesignerBatch::Validate() const {
  const Eigen::Index t = obs.rows();
  if (t == 0) throw std::invalid_argument("empty designer batch");
  if (next_obs.rows() != t || actions.rows() != t || rewards.size() != t ||
      static_cast<Eigen::Index>(dones.size()) != t) {
    throw std::invalid_argument("designer batch fields have unequal lengths");
  }
  if (!rewards.allFinite()) {
    throw std::invalid_argument("non-finite designer reward");
  }
}

CategoricalDesigner::CategoricalDesigner(nets::MlpSpec policy, int heads,
                                         nets::MlpSpec critic, DualRlConfig cfg)
    : net_(policy),
      heads_(heads),
      levels_(heads > 0 ? policy.output_size() / heads : 0),
      critic_(std::move(critic), cfg.critic),
      cfg_(cfg) {
  if (heads_ < 1 || levels_ * heads_ != policy.output_size()) {
    throw std::invalid_argument(
        "categorical designer: outputs must split evenly into heads");
  }
  params_ = nets::ParamBlock::Create("designer", dg::ParamRole::kDesigner, net_);
}

Matrix CategoricalDesigner::Probabilities(const Eigen::RowVectorXd& obs) const {
  const Matrix logits = net_.LogitsValue(params_.values(), obs);
  Matrix p(heads_, levels_);
  for (int h = 0; h < heads_; ++h) {
    p.row(h) = nets::SoftmaxRow(logits.block(0, h * levels_, 1, levels_).row(0));
  }
  return p;
}

std::vector<int> CategoricalDesigner::Act(const Eigen::RowVectorXd& obs,
                                          Rng& rng) const {
  const Matrix p = Probabilities(obs);
  std::vector<int> a(heads_);
  for (int h = 0; h < heads_; ++h) a[h] = nets::SampleCategorical(p.row(h), rng);
  return a;
}

dg::Var CategoricalDesigner::LogProb(std::span<const dg::Var> params,
                                     const Matrix& obs,
                                     const Matrix& actions) const {
  if (actions.cols() != heads_) {
    throw std::invalid_argument("categorical designer: one action per head");
  }
  dg::Var logits = net_.Logits(params, dg::Constant(obs));
  dg::Var total;
  for (int h = 0; h < heads_; ++h) {
    std::vector<dg::Index> idx(actions.rows());
    for (Eigen::Index r = 0; r < actions.rows(); ++r) {
      idx[r] = static_cast<dg::Index>(actions(r, h));
    }
    dg::Var lp = dg::Gather(
        dg::LogSoftmax(dg::SliceCols(logits, h * levels_, levels_)), idx);
    total = total.defined() ? dg::Add(total, lp) : lp;
  }
  return total;
}

DualRlStats CategoricalDesigner::Learn(const DesignerBatch& batch) {
  batch.Validate();
  dg::EnableGradGuard on(true);
  const Eigen::VectorXd adv = critic_.Advantages(batch.obs, batch.next_obs,
                                                 batch.rewards, batch.dones);
  dg::Var logp = LogProb(params_.vars, batch.obs, batch.actions);
  dg::Var entropy;
  if (cfg_.entropy_coef != 0.0) {
    dg::Var logits = net_.Logits(params_.vars, dg::Constant(batch.obs));
    for (int h = 0; h < heads_; ++h) {
      dg::Var e = nets::Entropy(dg::SliceCols(logits, h * levels_, levels_));
      entropy = entropy.defined() ? dg::Add(entropy, e) : e;
    }
  }
  DualRlStats stats = PolicyGradientStep(logp, entropy, adv, batch.episodes,
                                         cfg_, params_, adam_);
  stats.critic_loss = critic_.Train(batch.obs, batch.next_obs, batch.rewards,
                                    batch.dones, batch.episodes);
  return stats;
}

GaussianDesigner::GaussianDesigner(nets::MlpSpec mean, double lo, double hi,
                                   nets::MlpSpec critic, DualRlConfig cfg)
    : net_(mean),
      lo_(lo),
      hi_(hi),
      critic_(std::move(critic), cfg.critic),
      cfg_(cfg) {
  if (!(lo_ < hi_)) throw std::invalid_argument("Gaussian designer: lo < hi");
  params_ = nets::ParamBlock::Create("designer", dg::ParamRole::kDesigner, net_);
}

Eigen::RowVectorXd GaussianDesigner::Mean(const Eigen::RowVectorXd& input) const {
  return net_.LogitsValue(params_.values(), input).row(0);
}

Eigen::RowVectorXd GaussianDesigner::Sample(const Eigen::RowVectorXd& input,
                                            Rng& rng) const {
  const Eigen::RowVectorXd mu = Mean(input);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int attempt = 0; attempt < 2; ++attempt) {
    Eigen::RowVectorXd u(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) u(i) = mu(i) + n(rng);
    if (u.allFinite()) return u;
  }
  throw std::runtime_error("Gaussian designer: non-finite sample");
}

Eigen::RowVectorXd GaussianDesigner::Squash(const Eigen::RowVectorXd& u) const {
  return (lo_ + (hi_ - lo_) / (1.0 + (-u.array()).exp())).matrix();
}

dg::Var GaussianDesigner::LogProb(std::span<const dg::Var> params,
                                  const Matrix& input, const Matrix& u) const {
  dg::Var mu = net_.Logits(params, dg::Constant(input));
  dg::Var sq = dg::SumRows(dg::Square(dg::Sub(dg::Constant(u), mu)));
  const double norm = -0.5 * static_cast<double>(u.cols()) *
                      std::log(2.0 * std::numbers::pi);
  return dg::AddScalar(dg::Scale(sq, -0.5), norm);
}

DualRlStats GaussianDesigner::Learn(const DesignerBatch& batch,
                                    const Matrix& critic_obs,
                                    const Matrix& critic_next_obs) {
  batch.Validate();
  dg::EnableGradGuard on(true);
  const Eigen::VectorXd adv = critic_.Advantages(
      critic_obs, critic_next_obs, batch.rewards, batch.dones);
  dg::Var logp = LogProb(params_.vars, batch.obs, batch.actions);
  DualRlStats stats = PolicyGradientStep(logp, dg::Var(), adv, batch.episodes,
                                         cfg_, params_, adam_);
  stats.critic_loss = critic_.Train(critic_obs, critic_next_obs, batch.rewards,
                                    batch.dones, batch.episodes);
  return stats;
}

}  // namespace mgid::designers
