#ifndef MGID_HARNESS_ER_TRAINER_H_
#define MGID_HARNESS_ER_TRAINER_H_

#include <memory>
#include <optional>
#include <vector>

#include "mgid/agents/learners.h"
#include "mgid/designers/dual_rl.h"
#include "mgid/designers/incentive.h"
#include "mgid/designers/metagrad.h"
#include "mgid/harness/trainable.h"

namespace mgid::harness {

using dg::Matrix;

// Rows are steps, episodes contiguous.
struct ErBatch : designers::Trajectory {
  std::vector<Matrix> obs;       // per agent, T x 3n
  std::vector<Matrix> next_obs;  // per agent
  std::vector<std::vector<int>> actions;
  std::vector<Eigen::VectorXd> env_rewards;
  std::vector<Eigen::VectorXd> incentives;  // realized values
  Matrix designer_obs;
  Matrix designer_next_obs;
  Matrix designer_input;    // designer obs ++ joint-action one-hot
  Matrix designer_actions;  // dual-RL decisions, one row per step
  std::vector<std::uint8_t> dones;
  double explore_eps = 0.0;
  int episodes = 0;

  Eigen::Index steps() const { return static_cast<Eigen::Index>(dones.size()); }
  // Sum of environment rewards per step (R^ID).
  Eigen::VectorXd DesignerReward() const;
  Eigen::VectorXd IncentiveTotals() const;
  // Mean over episodes of sum(env) - sum(incentives).
  double Welfare() const;
};

class ErTrainer : public Trainable {
 public:
  explicit ErTrainer(const RunConfig& config);
  ~ErTrainer() override;

  void TrainEpisodes(long episodes) override;
  MetricsRecord Evaluate(int episodes) override;
  long episodes_done() const override { return episodes_done_; }
  nets::Checkpoint Save() const override;
  void Load(const nets::Checkpoint& ckpt) override;
  int num_agents() const override { return config_.er.n; }
  nlohmann::json Replay(std::uint64_t seed) const override;

  // One co-training iteration of `episodes_per_iter` episodes.
  void Iterate();
  double last_train_welfare() const { return last_train_welfare_; }
  const std::vector<agents::LearnerState>& learners() const { return learners_; }
  const designers::MetaGrad* metagrad() const { return metagrad_.get(); }
  // Incentive head for a designer input row (MetaGrad only).
  Eigen::RowVectorXd IncentiveHead(const Eigen::RowVectorXd& input) const;

  // Rolls out `episodes` episodes with the current parameters.
  std::shared_ptr<ErBatch> Rollout(int episodes, Rng& rng, double explore_eps,
                                   bool greedy_designer) const;

 private:
  class Problem;
  void IterateMetaGrad();
  void IterateDualRl();
  void IterateNone();
  agents::AgentTrajectorySlice Slice(const ErBatch& b, int i) const;
  std::vector<double> DesignerIncentives(const Eigen::RowVectorXd& dobs,
                                         const Eigen::RowVectorXd& input,
                                         std::span<const int> actions,
                                         Rng& rng, bool greedy,
                                         Eigen::RowVectorXd* decision) const;
  double ExploreEps() const;

  RunConfig config_;
  std::vector<std::unique_ptr<nets::Mlp>> policy_nets_;
  std::vector<std::unique_ptr<nets::Mlp>> critic_nets_;
  std::vector<agents::LearnerState> learners_;
  // MetaGrad
  std::unique_ptr<designers::IncentiveFunction> incentive_;
  std::unique_ptr<designers::ValueFunction> critic_;
  std::unique_ptr<designers::MetaGrad> metagrad_;
  std::unique_ptr<Problem> problem_;
  // dual-RL
  std::unique_ptr<designers::DiscreteIncentiveCodec> codec_;
  std::unique_ptr<designers::CategoricalDesigner> discrete_;
  std::unique_ptr<designers::GaussianDesigner> continuous_;

  Rng train_rng_;
  Rng eval_rng_;
  long episodes_done_ = 0;
  double last_train_welfare_ = 0.0;
};

}  // namespace mgid::harness

#endif  // MGID_HARNESS_ER_TRAINER_H_
