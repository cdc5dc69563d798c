#ifndef MGID_ENVS_ESCAPE_ROOM_H_
#define MGID_ENVS_ESCAPE_ROOM_H_

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mgid::envs {

// Positions double as actions: an action moves the agent to that position.
enum ErPosition : int { kLever = 0, kStart = 1, kDoor = 2 };
inline constexpr int kErActions = 3;

struct ErConfig {
  int n = 2;  // agents
  int m = 1;  // lever pullers needed
  int max_steps = 5;

  // Throws std::invalid_argument unless 1 <= m < n and max_steps >= 1.
  void Validate() const;
};

struct ErStepResult {
  std::vector<double> rewards;
  bool done = false;
};

class EscapeRoom {
 public:
  explicit EscapeRoom(ErConfig config);

  void Reset();
  // Throws std::invalid_argument for an invalid action index, a wrong
  // number of actions, or stepping a finished episode.
  ErStepResult Step(std::span<const int> actions);

  const ErConfig& config() const { return config_; }
  const std::vector<int>& positions() const { return positions_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }

  // Own one-hot followed by the one-hots of the other agents in index order.
  Eigen::RowVectorXd AgentObservation(int agent) const;
  // All agents' one-hots in index order.
  Eigen::RowVectorXd DesignerObservation() const;
  int agent_obs_size() const { return 3 * config_.n; }
  int designer_obs_size() const { return 3 * config_.n; }

 private:
  ErConfig config_;
  std::vector<int> positions_;
  int steps_ = 0;
  bool done_ = false;
};

// Rewards of one simultaneous move from `positions`, plus whether somebody
// exited. Pure function of the rules.
ErStepResult ErRewards(int m, std::span<const int> positions,
                       std::span<const int> actions);

// One-hot of every action in order, 1 x 3n. Incentive-function input is
// DesignerObservation() followed by this.
Eigen::RowVectorXd JointActionOneHot(std::span<const int> actions);

struct ErIncentiveResult {
  std::vector<double> totals;
  double psi = 0.0;
  double designer_reward = 0.0;
};

// Agent i receives env_rewards[i] + head[actions[i]]. Throws
// std::invalid_argument if head does not have one entry per action.
ErIncentiveResult ErApplyIncentives(std::span<const double> env_rewards,
                                    std::span<const double> head,
                                    std::span<const int> actions);

// 10 (n - m) - m: the best total environment reward of any behaviour.
double ErWelfareUpperBound(const ErConfig& c);
// 10 (n - m) - m - m (1 + eps): best designer test reward when each lever
// puller must be paid just over its lever cost.
double ErOptimalWelfare(const ErConfig& c, double eps = 0.0);

// Exhaustive search over deterministic joint behaviours from the start
// state (dynamic programming over positions x step).
// `incentive_compatible` charges each step the smallest incentive that makes
// every agent's move a best response against unilateral one-step deviations.
double ErBruteForceOptimum(const ErConfig& c, bool incentive_compatible);

}  // namespace mgid::envs

#endif  // MGID_ENVS_ESCAPE_ROOM_H_
