#include "mgid/designers/metagrad.h"

#include <cmath>
#include <stdexcept>

#include "mgid/diffgraph/autodiff.h"
#include "mgid/diffgraph/ops.h"

namespace mgid::designers {
namespace {

double Norm(std::span<const Matrix> g) {
  double sq = 0.0;
  for (const Matrix& m : g) sq += m.squaredNorm();
  return std::sqrt(sq);
}

}  // namespace

dg::Var OuterPpoSurrogate(const OuterInputs& in, double clip_eps) {
  const dg::Var& logp = in.joint_logp;
  if (!logp.defined() || logp.cols() != 1 ||
      logp.rows() != in.advantages.size()) {
    throw std::invalid_argument(
        "outer surrogate: log-probs must be T x 1 with one advantage per row");
  }
  if (in.weights.size() != 0 && in.weights.size() != in.advantages.size()) {
    throw std::invalid_argument("outer surrogate: weight length mismatch");
  }
  if (!(clip_eps > 0.0)) {
    throw std::invalid_argument("outer surrogate: clip eps must be > 0");
  }
  dg::Var ratio = dg::Exp(dg::Sub(logp, dg::StopGradient(logp)));
  dg::Var adv = dg::Constant(Matrix(in.advantages));
  dg::Var clipped = dg::Clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  dg::Var surr = dg::Minimum(dg::Mul(ratio, adv), dg::Mul(clipped, adv));
  if (in.weights.size() != 0) {
    surr = dg::Mul(surr, dg::Constant(Matrix(in.weights)));
  }
  return dg::Scale(dg::SumAll(surr), 1.0 / in.normalizer);
}

MetaGrad::MetaGrad(nets::ParamBlock eta, MetaGradConfig cfg)
    : eta_(std::move(eta)), cfg_(cfg) {
  if (!(cfg_.lr >= 0.0)) throw std::invalid_argument("designer lr must be >= 0");
}

TrajectoryPtr MetaGrad::Fresh(MetaGradProblem& problem) {
  TrajectoryPtr t = problem.Generate(eta_.values());
  if (!t) throw std::runtime_error("problem returned no trajectory");
  t->id = next_id_++;
  usage_[t->id];
  return t;
}

void MetaGrad::Start(MetaGradProblem& problem) { tau_ = Fresh(problem); }

IterationStats MetaGrad::Iterate(MetaGradProblem& problem) {
  if (!tau_) {
    throw std::logic_error("MetaGrad: no cached trajectory; call Start first");
  }
  IterationStats stats;
  stats.tau_id = tau_->id;

  // theta_hat(eta) from the training trajectory.
  problem.UpdateAgents(*tau_, eta_.vars);
  ++usage_[tau_->id].train;

  // Validation trajectory under theta_hat.
  TrajectoryPtr tau_hat = Fresh(problem);
  stats.tau_hat_id = tau_hat->id;
  OuterInputs in = problem.Outer(*tau_hat);
  ++usage_[tau_hat->id].validation;

  dg::Var outer = OuterPpoSurrogate(in, cfg_.clip_eps);
  stats.outer = outer.scalar();
  std::vector<Matrix> g_outer = dg::Values(dg::GradThroughUpdate(outer, eta_.vars));

  dg::Var cost = problem.Cost(*tau_, eta_.vars);
  stats.cost = cost.scalar();
  std::vector<Matrix> g_cost = dg::Values(
      dg::Grad(cost, eta_.vars, {.allow_unused = true}));
  for (auto& g : g_cost) g *= cfg_.cost_weight;
  stats.outer_grad_norm = Norm(g_outer);
  stats.cost_grad_norm = Norm(g_cost);
  if (!std::isfinite(stats.outer) || !std::isfinite(stats.outer_grad_norm) ||
      !std::isfinite(stats.cost_grad_norm)) {
    throw std::runtime_error("MetaGrad: non-finite designer loss or gradient");
  }

  std::vector<Matrix> eta = eta_.values();
  if (cfg_.cost_lr > 0.0) {
    agents::AdamUpdate(eta, g_outer, cfg_.lr, 1.0, outer_adam_, cfg_.adam);
    agents::AdamUpdate(eta, g_cost, cfg_.cost_lr, -1.0, cost_adam_, cfg_.adam);
  } else {
    for (size_t i = 0; i < eta.size(); ++i) g_outer[i] -= g_cost[i];
    agents::AdamUpdate(eta, g_outer, cfg_.lr, 1.0, outer_adam_, cfg_.adam);
  }
  eta_.Assign(eta);

  problem.TrainCritic(*tau_hat);
  tau_ = std::move(tau_hat);
  return stats;
}

}  // namespace mgid::designers
