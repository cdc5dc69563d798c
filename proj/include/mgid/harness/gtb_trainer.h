#ifndef MGID_HARNESS_GTB_TRAINER_H_
#define MGID_HARNESS_GTB_TRAINER_H_

#include <memory>
#include <optional>
#include <vector>

#include "mgid/agents/learners.h"
#include "mgid/designers/dual_rl.h"
#include "mgid/designers/incentive.h"
#include "mgid/designers/metagrad.h"
#include "mgid/designers/value_function.h"
#include "mgid/harness/run_config.h"
#include "mgid/harness/trainable.h"

namespace mgid::harness {

using dg::Matrix;

// cap(e) = min(1, 0.1 + 0.9 e / E_anneal); 1 when annealing is off.
double AnnealCap(const AnnealConfig& anneal, double episode);

// Per-episode summary kept for evaluation rows.
struct GtbEpisodeStats {
  double swf = 0.0;
  double prod = 0.0;  // at the last step
  double eq = 0.0;
  std::vector<double> utility;
  std::vector<double> income_pre, income_post, tax;
  std::vector<double> gathers, builds, trades;
  std::vector<double> mean_rates;
};

// A batch of GTB episodes. Agent rows are ordered [episode][agent][step],
// designer rows [episode][step], period rows [episode][period].
struct GtbBatch : designers::Trajectory {
  int episodes = 0;
  int agents = 0;
  int horizon = 0;
  int periods = 0;
  int period_length = 0;
  double cap = 1.0;
  double explore_eps = 0.0;
  std::vector<std::uint64_t> env_seeds;

  Matrix obs, next_obs;
  std::vector<int> actions;
  Eigen::VectorXd rewards;
  std::vector<std::uint8_t> agent_dones;

  Matrix designer_obs, designer_next_obs;
  Eigen::VectorXd designer_reward;  // prod * eq per step
  std::vector<std::uint8_t> designer_dones;

  Matrix period_obs, period_next_obs;
  Matrix rates;      // emitted rates
  Matrix decisions;  // dual-RL level indices
  Eigen::VectorXd period_reward;
  std::vector<std::uint8_t> period_dones;

  // Tax reconstruction: bracket masses of every period income ([e*N+i] ->
  // P x 7, zero rows where the liquid-coin cap bound) and marginal utility
  // of coin after each step ([e] -> H x N) and before it.
  std::vector<Matrix> mass;
  std::vector<Matrix> marginal_utility;
  std::vector<Matrix> marginal_utility_prev;

  std::vector<GtbEpisodeStats> stats;

  // Row indices of one agent's steps across all episodes.
  std::vector<Eigen::Index> AgentRows(int agent) const;
  double MeanSwf() const;
};

// Gather-Trade-Build co-training with a tax-setting designer.
class GtbTrainer : public Trainable {
 public:
  explicit GtbTrainer(const RunConfig& config);
  ~GtbTrainer() override;

  void TrainEpisodes(long episodes) override;
  MetricsRecord Evaluate(int episodes) override;
  long episodes_done() const override { return episodes_done_; }
  nets::Checkpoint Save() const override;
  void Load(const nets::Checkpoint& ckpt) override;
  int num_agents() const override { return config_.gtb.agents; }
  nlohmann::json Replay(std::uint64_t seed) const override;

  void Iterate();
  // Agent parameters at the end of curriculum Phase 1, once reached.
  const std::optional<nets::Checkpoint>& phase1_checkpoint() const {
    return phase1_;
  }
  bool in_phase1() const;
  double CurrentCap() const;
  const designers::MetaGrad* metagrad() const { return metagrad_.get(); }

  std::shared_ptr<GtbBatch> Rollout(int episodes, Rng& rng, double explore_eps,
                                    bool designer_active) const;

  // Zero-valued incentive per agent row whose eta-gradient is the exact
  // first-order effect of the rates on the agents' rewards.
  dg::Var TaxIncentives(const GtbBatch& b, const dg::Var& rates) const;
  dg::Var RatesVar(const GtbBatch& b, std::span<const dg::Var> eta) const;

 private:
  class Problem;
  void IterateAgentsOnly(bool designer_active);
  void IterateMetaGrad();
  void IterateDualRl();
  agents::AgentTrajectorySlice Slice(const GtbBatch& b, size_t learner) const;
  std::vector<double> EmitRates(const Eigen::RowVectorXd& dobs, double cap,
                                Rng& rng, Eigen::RowVectorXd* decision) const;
  double ExploreEps() const;
  void AddAgents(nets::Checkpoint& ckpt) const;
  void RestoreAgents(const nets::Checkpoint& ckpt);

  RunConfig config_;
  std::vector<std::unique_ptr<nets::Mlp>> policy_nets_;
  std::vector<std::unique_ptr<nets::Mlp>> critic_nets_;
  std::vector<agents::LearnerState> learners_;
  // Agents each learner trains on.
  std::vector<std::vector<int>> members_;

  std::unique_ptr<designers::IncentiveFunction> incentive_;
  std::unique_ptr<designers::ValueFunction> critic_;
  std::unique_ptr<designers::MetaGrad> metagrad_;
  std::unique_ptr<Problem> problem_;
  std::unique_ptr<designers::CategoricalDesigner> dual_;
  std::vector<double> static_rates_;

  int obs_dim_ = 0;
  int designer_dim_ = 0;
  Rng train_rng_;
  Rng eval_rng_;
  long episodes_done_ = 0;
  long phase2_start_ = 0;
  double last_train_welfare_ = 0.0;
  std::optional<nets::Checkpoint> phase1_;
};

std::unique_ptr<Trainable> MakeGtbTrainer(const RunConfig& config);

}  // namespace mgid::harness

#endif  // MGID_HARNESS_GTB_TRAINER_H_
