#include "mgid/envs/escape_room.h"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace mgid::envs {
namespace {

constexpr double kDoorReward = 10.0;
constexpr double kMoveCost = -1.0;

int Encode(std::span<const int> positions) {
  int code = 0;
  for (int p : positions) code = code * 3 + p;
  return code;
}

std::vector<int> Decode(int code, int n) {
  std::vector<int> out(n);
  for (int i = n - 1; i >= 0; --i) {
    out[i] = code % 3;
    code /= 3;
  }
  return out;
}

int Power3(int n) {
  int p = 1;
  for (int i = 0; i < n; ++i) p *= 3;
  return p;
}

}  // namespace

void ErConfig::Validate() const {
  if (n < 2 || m < 1 || m >= n) {
    throw std::invalid_argument("ER(n, m) requires 1 <= m < n");
  }
  if (max_steps < 1) throw std::invalid_argument("ER max_steps must be >= 1");
}

EscapeRoom::EscapeRoom(ErConfig config) : config_(config) {
  config_.Validate();
  Reset();
}

void EscapeRoom::Reset() {
  positions_.assign(config_.n, kStart);
  steps_ = 0;
  done_ = false;
}

ErStepResult ErRewards(int m, std::span<const int> positions,
                       std::span<const int> actions) {
  if (positions.size() != actions.size()) {
    throw std::invalid_argument("ER: one action per agent required");
  }
  int pulling = 0;
  for (int a : actions) {
    if (a < 0 || a >= kErActions) {
      throw std::invalid_argument("ER: invalid action " + std::to_string(a));
    }
    if (a == kLever) ++pulling;
  }
  // Post-move counting: the lever is held by everyone moving to or staying at it.
  const bool open = pulling >= m;
  ErStepResult r;
  r.rewards.resize(actions.size());
  for (size_t i = 0; i < actions.size(); ++i) {
    if (open && actions[i] == kDoor) {
      r.rewards[i] = kDoorReward;
      r.done = true;
    } else if (actions[i] == positions[i]) {
      r.rewards[i] = 0.0;
    } else {
      r.rewards[i] = kMoveCost;
    }
  }
  return r;
}

ErStepResult EscapeRoom::Step(std::span<const int> actions) {
  if (done_) throw std::invalid_argument("ER: episode already finished");
  if (static_cast<int>(actions.size()) != config_.n) {
    throw std::invalid_argument("ER: expected one action per agent");
  }
  ErStepResult r = ErRewards(config_.m, positions_, actions);
  positions_.assign(actions.begin(), actions.end());
  ++steps_;
  if (steps_ >= config_.max_steps) r.done = true;
  done_ = r.done;
  return r;
}

Eigen::RowVectorXd EscapeRoom::AgentObservation(int agent) const {
  Eigen::RowVectorXd obs = Eigen::RowVectorXd::Zero(3 * config_.n);
  obs(positions_[agent]) = 1.0;
  int block = 1;
  for (int j = 0; j < config_.n; ++j) {
    if (j == agent) continue;
    obs(3 * block + positions_[j]) = 1.0;
    ++block;
  }
  return obs;
}

Eigen::RowVectorXd EscapeRoom::DesignerObservation() const {
  return JointActionOneHot(positions_);
}

Eigen::RowVectorXd JointActionOneHot(std::span<const int> actions) {
  Eigen::RowVectorXd v =
      Eigen::RowVectorXd::Zero(3 * static_cast<Eigen::Index>(actions.size()));
  for (size_t i = 0; i < actions.size(); ++i) v(3 * i + actions[i]) = 1.0;
  return v;
}

ErIncentiveResult ErApplyIncentives(std::span<const double> env_rewards,
                                    std::span<const double> head,
                                    std::span<const int> actions) {
  if (head.size() != static_cast<size_t>(kErActions)) {
    throw std::invalid_argument("ER incentive head must have 3 entries");
  }
  if (env_rewards.size() != actions.size()) {
    throw std::invalid_argument("ER: rewards/actions size mismatch");
  }
  ErIncentiveResult r;
  r.totals.resize(actions.size());
  for (size_t i = 0; i < actions.size(); ++i) {
    const double inc = head[actions[i]];
    r.totals[i] = env_rewards[i] + inc;
    r.psi += inc;
    r.designer_reward += env_rewards[i];
  }
  return r;
}

double ErWelfareUpperBound(const ErConfig& c) {
  return kDoorReward * (c.n - c.m) + kMoveCost * c.m;
}

double ErOptimalWelfare(const ErConfig& c, double eps) {
  return ErWelfareUpperBound(c) - c.m * (1.0 + eps);
}

double ErBruteForceOptimum(const ErConfig& c, bool incentive_compatible) {
  c.Validate();
  if (c.n > 6) throw std::invalid_argument("brute force limited to n <= 6");
  const int states = Power3(c.n);
  const int joint = states;  // 3^n joint actions
  // Per (state, joint action): step value and whether the episode ends.
  std::vector<double> step_value(static_cast<size_t>(states) * joint);
  std::vector<char> exits(step_value.size());
  for (int s = 0; s < states; ++s) {
    const std::vector<int> pos = Decode(s, c.n);
    for (int a = 0; a < joint; ++a) {
      const std::vector<int> act = Decode(a, c.n);
      const ErStepResult r = ErRewards(c.m, pos, act);
      double value = 0.0;
      for (double x : r.rewards) value += x;
      if (incentive_compatible) {
        for (int i = 0; i < c.n; ++i) {
          double best_dev = -std::numeric_limits<double>::infinity();
          std::vector<int> dev = act;
          for (int b = 0; b < kErActions; ++b) {
            if (b == act[i]) continue;
            dev[i] = b;
            best_dev = std::max(best_dev, ErRewards(c.m, pos, dev).rewards[i]);
          }
          value -= std::max(0.0, best_dev - r.rewards[i]);
        }
      }
      step_value[static_cast<size_t>(s) * joint + a] = value;
      exits[static_cast<size_t>(s) * joint + a] = r.done;
    }
  }
  // V[t][s]: best value with t steps already taken.
  std::vector<double> next(states, 0.0), cur(states);
  for (int t = c.max_steps - 1; t >= 0; --t) {
    for (int s = 0; s < states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < joint; ++a) {
        const size_t k = static_cast<size_t>(s) * joint + a;
        const double tail = exits[k] || t + 1 == c.max_steps ? 0.0 : next[a];
        best = std::max(best, step_value[k] + tail);
      }
      cur[s] = best;
    }
    std::swap(cur, next);
  }
  const std::vector<int> start(c.n, kStart);
  return next[Encode(start)];
}

}  // namespace mgid::envs
