#include "mgid/agents/learners.h"

#include <stdexcept>

#include "mgid/diffgraph/autodiff.h"
#include "mgid/diffgraph/ops.h"
#include "mgid/nets/policy.h"

namespace mgid::agents {
namespace {

std::vector<dg::Var> LeavesFrom(std::span<const Matrix> values,
                                const char* name) {
  std::vector<dg::Var> out;
  out.reserve(values.size());
  for (const Matrix& v : values) out.push_back(dg::Leaf(name, v));
  return out;
}

Matrix Column(const Eigen::VectorXd& v) { return Matrix(v); }

Eigen::VectorXd NotDone(const AgentTrajectorySlice& s) {
  Eigen::VectorXd m(s.size());
  for (Eigen::Index t = 0; t < s.size(); ++t) m(t) = s.dones[t] ? 0.0 : 1.0;
  return m;
}

void RequireFinite(const dg::Var& v, const char* what) {
  if (!v.value().allFinite()) {
    throw std::invalid_argument(std::string("non-finite ") + what);
  }
}

// Ascent (sign +1) or descent (sign -1) step on `objective` w.r.t. theta.
std::vector<dg::Var> StepOn(const dg::Var& objective,
                            std::span<const dg::Var> theta, const AgentHyper& h,
                            double lr, double sign, bool create_graph,
                            AdamState* adam) {
  std::vector<dg::Var> grads =
      dg::Grad(objective, theta, {.create_graph = create_graph,
                                  .allow_unused = true});
  grads = ClipByGlobalNorm(grads, h.grad_clip);
  dg::EnableGradGuard mode(create_graph);
  return ApplyStep(theta, grads, lr, sign, h.adam ? adam : nullptr,
                   h.adam_cfg);
}

dg::Var EntropyBonus(const nets::Model& policy, const AgentHyper& h,
                     std::span<const dg::Var> theta, const dg::Var& obs) {
  return dg::Scale(dg::SumAll(nets::Entropy(PolicyLogits(policy, h, theta, obs))),
                   h.entropy_coef);
}

}  // namespace

CriticFit FitValue(const nets::Model& critic, std::span<const Matrix> params,
                   const Matrix& obs, const Eigen::VectorXd& targets, double lr,
                   double normalizer, AdamState* adam, const AdamConfig& cfg) {
  dg::EnableGradGuard on(true);
  std::vector<dg::Var> leaves = LeavesFrom(params, "critic");
  dg::Var v = critic.Logits(leaves, dg::Constant(obs));
  dg::Var diff = dg::Sub(v, dg::Constant(Column(targets)));
  dg::Var loss = dg::Scale(dg::SumAll(dg::Square(diff)), 0.5 / normalizer);
  std::vector<dg::Var> grads = dg::Grad(loss, leaves, {.allow_unused = true});
  CriticFit fit{dg::Values(leaves), loss.scalar()};
  const std::vector<Matrix> gv = dg::Values(grads);
  if (adam != nullptr) {
    AdamUpdate(fit.params, gv, lr, -1.0, *adam, cfg);
  } else {
    SgdUpdate(fit.params, gv, lr, -1.0);
  }
  return fit;
}

std::vector<Matrix> BlendTarget(std::span<const Matrix> main,
                                std::span<const Matrix> target, double rate) {
  std::vector<Matrix> out;
  out.reserve(main.size());
  for (size_t i = 0; i < main.size(); ++i) {
    out.push_back(rate * main[i] + (1.0 - rate) * target[i]);
  }
  return out;
}

const char* AgentKindName(AgentKind kind) {
  switch (kind) {
    case AgentKind::kPolicyGradient: return "pg";
    case AgentKind::kActorCritic: return "ac";
    case AgentKind::kPpo: return "ppo";
    case AgentKind::kQSoftmax: return "q_softmax";
  }
  return "unknown";
}

AgentKind ParseAgentKind(const std::string& name) {
  if (name == "pg") return AgentKind::kPolicyGradient;
  if (name == "ac") return AgentKind::kActorCritic;
  if (name == "ppo") return AgentKind::kPpo;
  if (name == "q_softmax") return AgentKind::kQSoftmax;
  throw std::invalid_argument("unknown agent kind: " + name);
}

void AgentHyper::Validate() const {
  if (!(lr >= 0.0)) throw std::invalid_argument("agent lr must be >= 0");
  if (!(critic_lr >= 0.0)) {
    throw std::invalid_argument("agent critic_lr must be >= 0");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in [0, 1]");
  }
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw std::invalid_argument("gae_lambda must lie in [0, 1]");
  }
  if (kind == AgentKind::kPpo && !(clip_eps > 0.0 && clip_eps < 1.0)) {
    throw std::invalid_argument("PPO clip eps must lie in (0, 1)");
  }
  if (!(target_rate > 0.0 && target_rate <= 1.0)) {
    throw std::invalid_argument("target rate c_v must lie in (0, 1]");
  }
  if (kind == AgentKind::kQSoftmax && !(q_temperature > 0.0)) {
    throw std::invalid_argument("softmax-Q temperature must be > 0");
  }
}

LearnerState MakeLearner(const std::string& prefix, const LearnerModels& models,
                         const AgentHyper& hyper) {
  LearnerState s;
  s.policy = nets::ParamBlock::Create(prefix + "/policy",
                                      dg::ParamRole::kAgentPolicy,
                                      *models.policy);
  if (hyper.has_critic()) {
    if (models.critic == nullptr) {
      throw std::invalid_argument("agent kind needs a critic model");
    }
    s.critic = models.critic->InitParams();
    s.target = s.critic;
  } else if (hyper.kind == AgentKind::kQSoftmax) {
    s.target = s.policy.values();
  }
  return s;
}

dg::Var PolicyLogits(const nets::Model& policy, const AgentHyper& h,
                     std::span<const dg::Var> params, const dg::Var& obs) {
  dg::Var logits = policy.Logits(params, obs);
  if (h.kind == AgentKind::kQSoftmax) logits = dg::Scale(logits, h.q_temperature);
  return logits;
}

Matrix PolicyLogitsValue(const nets::Model& policy, const AgentHyper& h,
                         std::span<const Matrix> params, const Matrix& obs) {
  Matrix logits = policy.LogitsValue(params, obs);
  if (h.kind == AgentKind::kQSoftmax) logits *= h.q_temperature;
  return logits;
}

dg::Var PolicyLogProbs(const nets::Model& policy, const AgentHyper& h,
                       std::span<const dg::Var> params, const Matrix& obs,
                       std::span<const int> actions, double eps) {
  return nets::ActionLogProbs(
      PolicyLogits(policy, h, params, dg::Constant(obs)), actions, eps);
}

Eigen::VectorXd CriticValues(const nets::Model& critic,
                             std::span<const Matrix> params, const Matrix& obs) {
  return critic.LogitsValue(params, obs).col(0);
}

UpdateResult PgUpdate(const nets::Model& policy, std::span<const dg::Var> theta,
                      const AgentTrajectorySlice& slice, const AgentHyper& h,
                      bool create_graph, AdamState* adam) {
  slice.Validate();
  dg::EnableGradGuard on(true);
  const double k = slice.num_episodes();
  dg::Var returns = DiscountedSum(TotalReward(slice), slice.dones, h.gamma);
  RequireFinite(returns, "return");
  dg::Var logp = PolicyLogProbs(policy, h, theta, slice.obs, slice.actions,
                                slice.explore_eps);
  dg::Var objective = dg::SumAll(dg::Mul(logp, returns));
  if (h.entropy_coef != 0.0) {
    objective = dg::Add(objective, EntropyBonus(policy, h, theta,
                                                dg::Constant(slice.obs)));
  }
  objective = dg::Scale(objective, 1.0 / k);
  UpdateResult r;
  r.objective = objective.scalar();
  r.theta_hat = StepOn(objective, theta, h, h.lr, 1.0, create_graph, adam);
  return r;
}

UpdateResult ActorCriticUpdate(const LearnerModels& models,
                               std::span<const dg::Var> theta,
                               std::span<const Matrix> critic,
                               std::span<const Matrix> target,
                               const AgentTrajectorySlice& slice,
                               const AgentHyper& h, bool create_graph,
                               AdamState* adam, AdamState* critic_adam) {
  slice.Validate();
  if (models.critic == nullptr) throw std::invalid_argument("missing critic");
  dg::EnableGradGuard on(true);
  const double k = slice.num_episodes();
  const Eigen::VectorXd v = CriticValues(*models.critic, critic, slice.obs);
  const Eigen::VectorXd bootstrap =
      h.gamma * NotDone(slice).cwiseProduct(
                    CriticValues(*models.critic, target, slice.next_obs));
  dg::Var reward = TotalReward(slice);
  RequireFinite(reward, "reward");
  dg::Var delta = dg::Add(reward, dg::Constant(Column(bootstrap - v)));
  dg::Var logp = PolicyLogProbs(*models.policy, h, theta, slice.obs,
                                slice.actions, slice.explore_eps);
  dg::Var objective = dg::SumAll(dg::Mul(logp, delta));
  if (h.entropy_coef != 0.0) {
    objective = dg::Add(objective, EntropyBonus(*models.policy, h, theta,
                                                dg::Constant(slice.obs)));
  }
  objective = dg::Scale(objective, 1.0 / k);
  UpdateResult r;
  r.objective = objective.scalar();
  r.theta_hat = StepOn(objective, theta, h, h.lr, 1.0, create_graph, adam);

  const Eigen::VectorXd y = reward.value().col(0) + bootstrap;
  CriticFit fit = FitValue(*models.critic, critic, slice.obs, y, h.critic_lr,
                           k, h.adam ? critic_adam : nullptr, h.adam_cfg);
  r.critic_loss = fit.loss;
  r.target_hat = BlendTarget(fit.params, target, h.target_rate);
  r.critic_hat = std::move(fit.params);
  return r;
}

UpdateResult PpoAgentUpdate(const LearnerModels& models,
                            std::span<const dg::Var> theta,
                            std::span<const Matrix> critic,
                            std::span<const Matrix> target,
                            const AgentTrajectorySlice& slice,
                            const AgentHyper& h, bool create_graph,
                            AdamState* adam, AdamState* critic_adam) {
  slice.Validate();
  if (!(h.clip_eps > 0.0 && h.clip_eps < 1.0)) {
    throw std::invalid_argument("PPO clip eps must lie in (0, 1)");
  }
  if (models.critic == nullptr) throw std::invalid_argument("missing critic");
  dg::EnableGradGuard on(true);
  const double k = slice.num_episodes();
  const Eigen::VectorXd v = CriticValues(*models.critic, critic, slice.obs);
  const Eigen::VectorXd bootstrap =
      h.gamma * NotDone(slice).cwiseProduct(
                    CriticValues(*models.critic, target, slice.next_obs));
  dg::Var reward = TotalReward(slice);
  RequireFinite(reward, "reward");
  dg::Var delta = dg::Add(reward, dg::Constant(Column(bootstrap - v)));
  dg::Var adv = Gae(delta, slice.dones, h.gamma, h.gae_lambda);
  dg::Var logp = PolicyLogProbs(*models.policy, h, theta, slice.obs,
                                slice.actions, slice.explore_eps);
  dg::Var ratio = dg::Exp(dg::Sub(logp, dg::StopGradient(logp)));
  dg::Var surrogate = dg::Minimum(
      dg::Mul(ratio, adv),
      dg::Mul(dg::Clip(ratio, 1.0 - h.clip_eps, 1.0 + h.clip_eps), adv));
  dg::Var objective = dg::SumAll(surrogate);
  if (h.entropy_coef != 0.0) {
    objective = dg::Add(objective, EntropyBonus(*models.policy, h, theta,
                                                dg::Constant(slice.obs)));
  }
  objective = dg::Scale(objective, 1.0 / k);
  UpdateResult r;
  r.objective = objective.scalar();
  r.theta_hat = StepOn(objective, theta, h, h.lr, 1.0, create_graph, adam);

  const Eigen::VectorXd y = adv.value().col(0) + v;
  CriticFit fit = FitValue(*models.critic, critic, slice.obs, y, h.critic_lr,
                           k, h.adam ? critic_adam : nullptr, h.adam_cfg);
  r.critic_loss = fit.loss;
  r.target_hat = BlendTarget(fit.params, target, h.target_rate);
  r.critic_hat = std::move(fit.params);
  return r;
}

UpdateResult QSoftmaxUpdate(const nets::Model& q, std::span<const dg::Var> theta,
                            std::span<const Matrix> target,
                            const AgentTrajectorySlice& slice,
                            const AgentHyper& h, bool create_graph,
                            AdamState* adam) {
  slice.Validate();
  if (!(h.q_temperature > 0.0)) {
    throw std::invalid_argument("softmax-Q temperature must be > 0");
  }
  dg::EnableGradGuard on(true);
  const double k = slice.num_episodes();
  const Matrix q_next = q.LogitsValue(target, slice.next_obs);
  const Eigen::VectorXd bootstrap =
      h.gamma * NotDone(slice).cwiseProduct(q_next.rowwise().maxCoeff());
  dg::Var reward = TotalReward(slice);
  RequireFinite(reward, "reward");
  dg::Var y = dg::Add(reward, dg::Constant(Column(bootstrap)));
  std::vector<dg::Index> idx(slice.actions.begin(), slice.actions.end());
  dg::Var pred = dg::Gather(q.Logits(theta, dg::Constant(slice.obs)), idx);
  dg::Var loss =
      dg::Scale(dg::SumAll(dg::Square(dg::Sub(y, pred))), 0.5 / k);
  UpdateResult r;
  r.objective = loss.scalar();
  r.theta_hat = StepOn(loss, theta, h, h.lr, -1.0, create_graph, adam);
  r.target_hat = BlendTarget(dg::Values(r.theta_hat), target, h.target_rate);
  return r;
}

UpdateResult UpdateLearner(const LearnerModels& models, LearnerState& state,
                           const AgentTrajectorySlice& slice,
                           const AgentHyper& h, bool create_graph) {
  switch (h.kind) {
    case AgentKind::kPolicyGradient:
      return PgUpdate(*models.policy, state.policy.vars, slice, h,
                      create_graph, &state.policy_adam);
    case AgentKind::kActorCritic:
      return ActorCriticUpdate(models, state.policy.vars, state.critic,
                               state.target, slice, h, create_graph,
                               &state.policy_adam, &state.critic_adam);
    case AgentKind::kPpo:
      return PpoAgentUpdate(models, state.policy.vars, state.critic,
                            state.target, slice, h, create_graph,
                            &state.policy_adam, &state.critic_adam);
    case AgentKind::kQSoftmax:
      return QSoftmaxUpdate(*models.policy, state.policy.vars, state.target,
                            slice, h, create_graph, &state.policy_adam);
  }
  throw std::invalid_argument("unknown agent kind");
}

void Commit(LearnerState& state, const UpdateResult& update) {
  state.policy.Assign(dg::Values(update.theta_hat));
  if (!update.critic_hat.empty()) state.critic = update.critic_hat;
  if (!update.target_hat.empty()) state.target = update.target_hat;
}

}  // namespace mgid::agents
