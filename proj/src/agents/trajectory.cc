#include "mgid/agents/trajectory.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mgid/diffgraph/ops.h"

namespace mgid::agents {

int AgentTrajectorySlice::num_episodes() const {
  int n = 0;
  for (auto d : dones) n += d ? 1 : 0;
  return n;
}

void AgentTrajectorySlice::Validate() const {
  const Eigen::Index t = size();
  if (t == 0) throw std::invalid_argument("empty trajectory");
  if (obs.rows() != t || next_obs.rows() != t || env_rewards.size() != t ||
      static_cast<Eigen::Index>(dones.size()) != t) {
    throw std::invalid_argument("trajectory fields have unequal lengths");
  }
  if (!dones.back()) {
    throw std::invalid_argument("trajectory ends mid-episode");
  }
  if (!env_rewards.allFinite()) {
    throw std::invalid_argument("non-finite reward in trajectory");
  }
  if (incentives.defined()) {
    if (incentives.rows() != t || incentives.cols() != 1) {
      throw std::invalid_argument("incentives must be T x 1");
    }
    if (!incentives.value().allFinite()) {
      throw std::invalid_argument("non-finite incentive in trajectory");
    }
  }
}

dg::Var TotalReward(const AgentTrajectorySlice& slice) {
  dg::Var env = dg::Constant(Matrix(slice.env_rewards));
  if (!slice.incentives.defined()) return env;
  return dg::Add(env, slice.incentives);
}

AgentTrajectorySlice ConcatSlices(std::span<const AgentTrajectorySlice> parts) {
  if (parts.empty()) throw std::invalid_argument("no slices to concatenate");
  if (parts.size() == 1) return parts[0];
  AgentTrajectorySlice out;
  Eigen::Index rows = 0;
  bool any_incentive = false;
  for (const auto& p : parts) {
    rows += p.size();
    any_incentive = any_incentive || p.incentives.defined();
  }
  const Eigen::Index dim = parts[0].obs.cols();
  out.obs.resize(rows, dim);
  out.next_obs.resize(rows, dim);
  out.env_rewards.resize(rows);
  out.explore_eps = parts[0].explore_eps;
  std::vector<dg::Var> inc;
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    if (p.obs.cols() != dim) {
      throw std::invalid_argument("slices have different observation sizes");
    }
    if (p.explore_eps != out.explore_eps) {
      throw std::invalid_argument("slices use different exploration rates");
    }
    out.obs.middleRows(r, p.size()) = p.obs;
    out.next_obs.middleRows(r, p.size()) = p.next_obs;
    out.env_rewards.segment(r, p.size()) = p.env_rewards;
    out.actions.insert(out.actions.end(), p.actions.begin(), p.actions.end());
    out.dones.insert(out.dones.end(), p.dones.begin(), p.dones.end());
    if (any_incentive) {
      inc.push_back(p.incentives.defined() ? p.incentives
                                           : dg::Zeros(p.size(), 1));
    }
    r += p.size();
  }
  if (any_incentive) out.incentives = dg::ConcatRows(inc);
  return out;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> EpisodeSegments(
    std::span<const std::uint8_t> dones) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> segs;
  Eigen::Index begin = 0;
  const auto n = static_cast<Eigen::Index>(dones.size());
  for (Eigen::Index t = 0; t < n; ++t) {
    if (dones[t]) {
      segs.emplace_back(begin, t + 1);
      begin = t + 1;
    }
  }
  // A trailing partial episode is treated as truncated.
  if (begin < n) segs.emplace_back(begin, n);
  return segs;
}

Matrix DiscountMatrix(Eigen::Index length, double factor) {
  Matrix l = Matrix::Zero(length, length);
  for (Eigen::Index t = 0; t < length; ++t) {
    double w = 1.0;
    for (Eigen::Index k = t; k < length; ++k) {
      l(t, k) = w;
      w *= factor;
    }
  }
  return l;
}

dg::Var DiscountedSum(const dg::Var& x, std::span<const std::uint8_t> dones,
                      double factor) {
  if (x.cols() != 1 || x.rows() != static_cast<Eigen::Index>(dones.size())) {
    throw std::invalid_argument("DiscountedSum: x must be T x 1");
  }
  const auto segs = EpisodeSegments(dones);
  if (segs.size() == 1) {
    return dg::MatMul(dg::Constant(DiscountMatrix(x.rows(), factor)), x);
  }
  std::vector<dg::Var> parts;
  parts.reserve(segs.size());
  for (auto [b, e] : segs) {
    parts.push_back(dg::MatMul(dg::Constant(DiscountMatrix(e - b, factor)),
                               dg::SliceRows(x, b, e - b)));
  }
  return dg::ConcatRows(parts);
}

Eigen::VectorXd DiscountedSumValue(const Eigen::VectorXd& x,
                                   std::span<const std::uint8_t> dones,
                                   double factor) {
  if (x.size() != static_cast<Eigen::Index>(dones.size())) {
    throw std::invalid_argument("DiscountedSumValue: length mismatch");
  }
  Eigen::VectorXd out(x.size());
  double acc = 0.0;
  for (Eigen::Index t = x.size() - 1; t >= 0; --t) {
    if (dones[t]) acc = 0.0;
    acc = x(t) + factor * acc;
    out(t) = acc;
  }
  return out;
}

}  // namespace mgid::agents
