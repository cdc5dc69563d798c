#ifndef MGID_DESIGNERS_DUAL_RL_H_
#define MGID_DESIGNERS_DUAL_RL_H_

#include <cstdint>
#include <span>
#include <vector>

#include "mgid/agents/optimizer.h"
#include "mgid/core/random.h"
#include "mgid/designers/value_function.h"
#include "mgid/nets/mlp.h"

namespace mgid::designers {

// Composite discrete action <-> one incentive value per agent-action type.
// Index digits are read lexicographically: action type 0 is the most
// significant digit, so index 0 assigns values[0] to every type.
class DiscreteIncentiveCodec {
 public:
  // Throws std::invalid_argument when |values|^num_types exceeds `cap` or
  // the inputs are empty.
  DiscreteIncentiveCodec(std::vector<double> values, int num_types,
                         long cap = 100000);

  long size() const { return size_; }
  int num_types() const { return num_types_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double> Decode(long index) const;
  long Encode(std::span<const int> digits) const;

 private:
  std::vector<double> values_;
  int num_types_;
  long size_;
};

struct DualRlConfig {
  double lr = 1e-3;
  double entropy_coef = 0.0;
  ValueConfig critic;
  agents::AdamConfig adam;
};

// Designer decisions of one batch, one row per decision.
struct DesignerBatch {
  Matrix obs;
  Matrix next_obs;
  // Discrete: one column per categorical head holding the chosen index.
  // Continuous: the Gaussian samples u.
  Matrix actions;
  Eigen::VectorXd rewards;
  std::vector<std::uint8_t> dones;
  double episodes = 1.0;

  void Validate() const;
};

struct DualRlStats {
  double objective = 0.0;
  double critic_loss = 0.0;
};

// Policy-gradient designer over one or more categorical heads of equal size
// (one head: a composite incentive action; several: a factored tax policy).
class CategoricalDesigner {
 public:
  CategoricalDesigner(nets::MlpSpec policy, int heads, nets::MlpSpec critic,
                      DualRlConfig cfg);

  int heads() const { return heads_; }
  int levels() const { return levels_; }
  // Samples one index per head.
  std::vector<int> Act(const Eigen::RowVectorXd& obs, Rng& rng) const;
  // Per-head probabilities, heads x levels.
  Matrix Probabilities(const Eigen::RowVectorXd& obs) const;
  // Sum over heads of log pi(a_h|s), T x 1.
  dg::Var LogProb(std::span<const dg::Var> params, const Matrix& obs,
                  const Matrix& actions) const;
  DualRlStats Learn(const DesignerBatch& batch);

  nets::ParamBlock& params() { return params_; }
  const nets::ParamBlock& params() const { return params_; }
  ValueFunction& critic() { return critic_; }

 private:
  nets::Mlp net_;
  int heads_;
  int levels_;
  nets::ParamBlock params_;
  ValueFunction critic_;
  DualRlConfig cfg_;
  agents::AdamState adam_;
};

// Gaussian designer: u ~ N(mu_eta(x), I), emitted value lo + (hi - lo)
// sigmoid(u) per output.
class GaussianDesigner {
 public:
  GaussianDesigner(nets::MlpSpec mean, double lo, double hi,
                   nets::MlpSpec critic, DualRlConfig cfg);

  int outputs() const { return net_.output_size(); }
  Eigen::RowVectorXd Mean(const Eigen::RowVectorXd& input) const;
  // Returns u; throws std::runtime_error if two draws in a row are not
  // finite.
  Eigen::RowVectorXd Sample(const Eigen::RowVectorXd& input, Rng& rng) const;
  Eigen::RowVectorXd Squash(const Eigen::RowVectorXd& u) const;
  // log N(u; mu, I) per row, T x 1.
  dg::Var LogProb(std::span<const dg::Var> params, const Matrix& input,
                  const Matrix& u) const;
  // The batch's obs rows must be the mean network's inputs; next_obs rows
  // feed the critic together with obs (see critic_obs).
  DualRlStats Learn(const DesignerBatch& batch, const Matrix& critic_obs,
                    const Matrix& critic_next_obs);

  nets::ParamBlock& params() { return params_; }
  const nets::ParamBlock& params() const { return params_; }
  ValueFunction& critic() { return critic_; }

 private:
  nets::Mlp net_;
  double lo_;
  double hi_;
  nets::ParamBlock params_;
  ValueFunction critic_;
  DualRlConfig cfg_;
  agents::AdamState adam_;
};

}  // namespace mgid::designers

#endif  // MGID_DESIGNERS_DUAL_RL_H_
