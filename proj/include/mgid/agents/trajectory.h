#ifndef MGID_AGENTS_TRAJECTORY_H_
#define MGID_AGENTS_TRAJECTORY_H_

#include <cstdint>
#include <span>
#include <vector>

#include "mgid/diffgraph/graph.h"

namespace mgid::agents {

using dg::Matrix;

// One learner's view of a batch of complete episodes, stored row-per-step.
// Episodes are contiguous; `dones[t]` marks the last step of each episode.
struct AgentTrajectorySlice {
  Matrix obs;       // T x obs_dim
  Matrix next_obs;  // T x obs_dim, observation after step t
  std::vector<int> actions;
  Eigen::VectorXd env_rewards;
  // Additive, graph-linked reward term (T x 1). Undefined when no designer
  // is present.
  dg::Var incentives;
  std::vector<std::uint8_t> dones;
  // Exploration rate the behaviour policy used.
  double explore_eps = 0.0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(actions.size()); }
  int num_episodes() const;
  // Throws std::invalid_argument for an empty or incomplete slice, length
  // mismatches, or non-finite rewards.
  void Validate() const;
};

// Environment reward plus incentive, T x 1. With incentives undefined this
// is the environment reward as a constant.
dg::Var TotalReward(const AgentTrajectorySlice& slice);

// Stacks slices row-wise (shared-parameter learners).
AgentTrajectorySlice ConcatSlices(std::span<const AgentTrajectorySlice> parts);

// [begin, end) row ranges of the episodes in a done mask.
std::vector<std::pair<Eigen::Index, Eigen::Index>> EpisodeSegments(
    std::span<const std::uint8_t> dones);

// Upper-triangular L with L(t, l) = factor^(l - t) for t <= l.
Matrix DiscountMatrix(Eigen::Index length, double factor);

// G_t = sum_{l >= t} factor^(l - t) x_l within each episode. Linear in x,
// so graph-linked inputs stay graph-linked.
dg::Var DiscountedSum(const dg::Var& x, std::span<const std::uint8_t> dones,
                      double factor);
Eigen::VectorXd DiscountedSumValue(const Eigen::VectorXd& x,
                                   std::span<const std::uint8_t> dones,
                                   double factor);

// Generalized advantage estimate A_t = sum_{l >= t} (gamma lambda)^(l - t)
// delta_l.
inline dg::Var Gae(const dg::Var& deltas, std::span<const std::uint8_t> dones,
                   double gamma, double lambda) {
  return DiscountedSum(deltas, dones, gamma * lambda);
}
inline Eigen::VectorXd GaeValue(const Eigen::VectorXd& deltas,
                                std::span<const std::uint8_t> dones,
                                double gamma, double lambda) {
  return DiscountedSumValue(deltas, dones, gamma * lambda);
}

}  // namespace mgid::agents

#endif  // MGID_AGENTS_TRAJECTORY_H_
