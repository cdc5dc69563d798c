#ifndef MGID_DESIGNERS_METAGRAD_H_
#define MGID_DESIGNERS_METAGRAD_H_

#include <map>
#include <memory>
#include <span>
#include <vector>

#include "mgid/agents/optimizer.h"
#include "mgid/nets/mlp.h"

namespace mgid::designers {

using dg::Matrix;

struct OuterInputs {
  // sum_i log pi_{theta_hat_i(eta)}(a_i|o_i) per step, T x 1.
  dg::Var joint_logp;
  Eigen::VectorXd advantages;
  // Optional per-step weights (e.g. exact expectation fixtures); empty = 1.
  Eigen::VectorXd weights;
  // Divides the summed surrogate (number of episodes).
  double normalizer = 1.0;
};

// (1/normalizer) sum_t w_t min(r_t A_t, clip(r_t, 1-eps, 1+eps) A_t) with
// r_t = exp(logp_t - stop(logp_t)), which equals 1 in value and carries the
// gradient of the policy ratio. clip_eps = infinity removes the clip.
dg::Var OuterPpoSurrogate(const OuterInputs& in, double clip_eps);

// Base of environment-specific trajectory records.
struct Trajectory {
  virtual ~Trajectory() = default;
  int id = -1;
};
using TrajectoryPtr = std::shared_ptr<Trajectory>;

// What MetaGrad needs from an environment/agent population.
class MetaGradProblem {
 public:
  virtual ~MetaGradProblem() = default;
  // Rolls out the agents' current parameters with incentives from `eta`.
  virtual TrajectoryPtr Generate(std::span<const Matrix> eta) = 0;
  // Updates every agent on `tau` with incentives recomputed from `eta` as
  // graph nodes, keeps the graph-linked theta_hat(eta) for OuterInputs, and
  // makes theta_hat the acting parameters.
  virtual void UpdateAgents(const Trajectory& tau,
                            std::span<const dg::Var> eta) = 0;
  // Joint log-probabilities of `tau_hat` under the theta_hat kept by the
  // last UpdateAgents, and the designer advantages on it.
  virtual OuterInputs Outer(const Trajectory& tau_hat) = 0;
  // psi(tau; eta), the incentive cost of the training trajectory.
  virtual dg::Var Cost(const Trajectory& tau, std::span<const dg::Var> eta) = 0;
  virtual void TrainCritic(const Trajectory& tau_hat) = 0;
};

struct MetaGradConfig {
  double lr = 1e-3;       // alpha_ID, outer surrogate
  double cost_lr = 1e-4;  // alpha_cost; <= 0 folds the cost into the main step
  double cost_weight = 1.0;
  double clip_eps = 0.2;
  agents::AdamConfig adam;
};

struct TrajectoryUsage {
  int train = 0;
  int validation = 0;
};

struct IterationStats {
  double outer = 0.0;
  double cost = 0.0;
  double outer_grad_norm = 0.0;
  double cost_grad_norm = 0.0;
  int tau_id = -1;
  int tau_hat_id = -1;
};

// Pipelined meta-gradient incentive design with one unrolled agent step.
class MetaGrad {
 public:
  MetaGrad(nets::ParamBlock eta, MetaGradConfig cfg);

  // Generates the first training trajectory.
  void Start(MetaGradProblem& problem);
  // Agents update on tau, tau_hat is rolled out under theta_hat, eta ascends
  // the outer surrogate and descends the cost, the critic trains on tau_hat,
  // then tau <- tau_hat. Throws std::logic_error before Start().
  IterationStats Iterate(MetaGradProblem& problem);

  const nets::ParamBlock& eta() const { return eta_; }
  nets::ParamBlock& mutable_eta() { return eta_; }
  const MetaGradConfig& config() const { return cfg_; }
  const std::map<int, TrajectoryUsage>& usage() const { return usage_; }
  bool started() const { return tau_ != nullptr; }
  const Trajectory* cached() const { return tau_.get(); }

 private:
  TrajectoryPtr Fresh(MetaGradProblem& problem);

  nets::ParamBlock eta_;
  MetaGradConfig cfg_;
  agents::AdamState outer_adam_;
  agents::AdamState cost_adam_;
  TrajectoryPtr tau_;
  int next_id_ = 0;
  std::map<int, TrajectoryUsage> usage_;
};

}  // namespace mgid::designers

#endif  // MGID_DESIGNERS_METAGRAD_H_
