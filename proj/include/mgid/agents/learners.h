#ifndef MGID_AGENTS_LEARNERS_H_
#define MGID_AGENTS_LEARNERS_H_

#include <span>
#include <string>
#include <vector>

#include "mgid/agents/optimizer.h"
#include "mgid/agents/trajectory.h"
#include "mgid/nets/mlp.h"

namespace mgid::agents {

enum class AgentKind { kPolicyGradient, kActorCritic, kPpo, kQSoftmax };

const char* AgentKindName(AgentKind kind);
// Accepts "pg", "ac", "ppo", "q_softmax". Throws std::invalid_argument.
AgentKind ParseAgentKind(const std::string& name);

struct AgentHyper {
  AgentKind kind = AgentKind::kPolicyGradient;
  double lr = 1e-2;         // policy (or Q) learning rate
  double critic_lr = 1e-2;  // value-function learning rate
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double entropy_coef = 0.0;
  // Target network rate c_v: target <- c_v * main + (1 - c_v) * target.
  double target_rate = 1.0;
  // Inverse temperature of the softmax-Q policy.
  double q_temperature = 1.0;
  // Global-norm clip on the policy gradient; 0 disables.
  double grad_clip = 0.0;
  bool adam = false;
  AdamConfig adam_cfg;

  // Throws std::invalid_argument.
  void Validate() const;
  bool has_critic() const {
    return kind == AgentKind::kActorCritic || kind == AgentKind::kPpo;
  }
  bool has_target() const { return kind != AgentKind::kPolicyGradient; }
};

// Networks used by one learner. The critic is only read for AC and PPO.
struct LearnerModels {
  const nets::Model* policy = nullptr;
  const nets::Model* critic = nullptr;
};

// Mutable state of one learner (a single agent, or a shared policy).
struct LearnerState {
  nets::ParamBlock policy;
  std::vector<Matrix> critic;
  std::vector<Matrix> target;
  AdamState policy_adam;
  AdamState critic_adam;
};

LearnerState MakeLearner(const std::string& prefix, const LearnerModels& models,
                         const AgentHyper& hyper);

struct UpdateResult {
  // Updated policy parameters; depend on the incentive graph when the update
  // ran with create_graph.
  std::vector<dg::Var> theta_hat;
  std::vector<Matrix> critic_hat;
  std::vector<Matrix> target_hat;
  double objective = 0.0;
  double critic_loss = 0.0;
};

// Vanilla policy gradient: theta + lr * grad sum_t log pi(a_t|o_t) G_t with
// discounted returns of the total reward.
UpdateResult PgUpdate(const nets::Model& policy, std::span<const dg::Var> theta,
                      const AgentTrajectorySlice& slice, const AgentHyper& h,
                      bool create_graph, AdamState* adam = nullptr);

// Actor with TD(0) advantage; critic regressed to r + gamma V'(o').
UpdateResult ActorCriticUpdate(const LearnerModels& models,
                               std::span<const dg::Var> theta,
                               std::span<const Matrix> critic,
                               std::span<const Matrix> target,
                               const AgentTrajectorySlice& slice,
                               const AgentHyper& h, bool create_graph,
                               AdamState* adam = nullptr,
                               AdamState* critic_adam = nullptr);

// One step on the clipped surrogate with GAE advantages.
UpdateResult PpoAgentUpdate(const LearnerModels& models,
                            std::span<const dg::Var> theta,
                            std::span<const Matrix> critic,
                            std::span<const Matrix> target,
                            const AgentTrajectorySlice& slice,
                            const AgentHyper& h, bool create_graph,
                            AdamState* adam = nullptr,
                            AdamState* critic_adam = nullptr);

// One descent step on the squared TD error of Q against
// r + gamma max_a Q'(o', a).
UpdateResult QSoftmaxUpdate(const nets::Model& q, std::span<const dg::Var> theta,
                            std::span<const Matrix> target,
                            const AgentTrajectorySlice& slice,
                            const AgentHyper& h, bool create_graph,
                            AdamState* adam = nullptr);

// Dispatches on h.kind using the learner's current parameters.
UpdateResult UpdateLearner(const LearnerModels& models, LearnerState& state,
                           const AgentTrajectorySlice& slice,
                           const AgentHyper& h, bool create_graph);

// Adopts the values of an update.
void Commit(LearnerState& state, const UpdateResult& update);

// Policy logits for any agent kind (tau * Q for softmax-Q agents).
dg::Var PolicyLogits(const nets::Model& policy, const AgentHyper& h,
                     std::span<const dg::Var> params, const dg::Var& obs);
Matrix PolicyLogitsValue(const nets::Model& policy, const AgentHyper& h,
                         std::span<const Matrix> params, const Matrix& obs);

// log pi(a_t|o_t) of the exploration-mixed policy, T x 1.
dg::Var PolicyLogProbs(const nets::Model& policy, const AgentHyper& h,
                       std::span<const dg::Var> params, const Matrix& obs,
                       std::span<const int> actions, double eps);

// One regression step of a value network toward `targets` (squared error
// scaled by 0.5 / normalizer). Adam when `adam` is given, else SGD.
struct CriticFit {
  std::vector<Matrix> params;
  double loss = 0.0;
};
CriticFit FitValue(const nets::Model& critic, std::span<const Matrix> params,
                   const Matrix& obs, const Eigen::VectorXd& targets, double lr,
                   double normalizer, AdamState* adam,
                   const AdamConfig& cfg = {});

// c * main + (1 - c) * target.
std::vector<Matrix> BlendTarget(std::span<const Matrix> main,
                                std::span<const Matrix> target, double rate);

// Column vector of critic values.
Eigen::VectorXd CriticValues(const nets::Model& critic,
                             std::span<const Matrix> params, const Matrix& obs);

}  // namespace mgid::agents

#endif  // MGID_AGENTS_LEARNERS_H_
