#include "mgid/agents/optimizer.h"

#include <cmath>
#include <stdexcept>

#include "mgid/diffgraph/autodiff.h"
#include "mgid/diffgraph/ops.h"

namespace mgid::agents {
namespace {

void EnsureState(AdamState& s, std::span<const Matrix> shapes) {
  if (s.m.size() == shapes.size()) return;
  if (!s.m.empty()) throw std::invalid_argument("Adam state size mismatch");
  for (const Matrix& p : shapes) {
    s.m.push_back(Matrix::Zero(p.rows(), p.cols()));
    s.v.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

}  // namespace

std::vector<dg::Var> ClipByGlobalNorm(std::span<const dg::Var> grads,
                                      double max_norm) {
  std::vector<dg::Var> out(grads.begin(), grads.end());
  if (max_norm <= 0.0) return out;
  double sq = 0.0;
  for (const auto& g : grads) sq += g.value().squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return out;
  const double factor = max_norm / norm;
  for (auto& g : out) g = dg::Scale(g, factor);
  return out;
}

std::vector<dg::Var> ApplyStep(std::span<const dg::Var> params,
                               std::span<const dg::Var> grads, double lr,
                               double sign, AdamState* adam,
                               const AdamConfig& cfg) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("ApplyStep: params/grads size mismatch");
  }
  std::vector<dg::Var> out;
  out.reserve(params.size());
  if (adam == nullptr) {
    for (size_t i = 0; i < params.size(); ++i) {
      out.push_back(dg::Add(params[i], dg::Scale(grads[i], sign * lr)));
    }
    return out;
  }
  std::vector<Matrix> gv = dg::Values(grads);
  EnsureState(*adam, gv);
  const long t = adam->step + 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); ++i) {
    Matrix v_new = cfg.beta2 * adam->v[i] +
                   (1.0 - cfg.beta2) * gv[i].cwiseProduct(gv[i]);
    Matrix denom =
        ((v_new / bc2).array().sqrt() + cfg.eps).inverse().matrix();
    // m_new = beta1 * m + (1 - beta1) * g, graph-linked through g.
    dg::Var m_new = dg::Add(dg::Constant(cfg.beta1 * adam->m[i]),
                            dg::Scale(grads[i], 1.0 - cfg.beta1));
    dg::Var step = dg::Mul(m_new, dg::Constant(denom * (sign * lr / bc1)));
    out.push_back(dg::Add(params[i], step));
    adam->m[i] = cfg.beta1 * adam->m[i] + (1.0 - cfg.beta1) * gv[i];
    adam->v[i] = std::move(v_new);
  }
  adam->step = t;
  return out;
}

void AdamUpdate(std::vector<Matrix>& params, std::span<const Matrix> grads,
                double lr, double sign, AdamState& state,
                const AdamConfig& cfg) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("AdamUpdate: params/grads size mismatch");
  }
  EnsureState(state, grads);
  const long t = ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] +
                 (1.0 - cfg.beta2) * grads[i].cwiseProduct(grads[i]);
    params[i].array() += sign * lr * (state.m[i].array() / bc1) /
                         ((state.v[i].array() / bc2).sqrt() + cfg.eps);
  }
}

void SgdUpdate(std::vector<Matrix>& params, std::span<const Matrix> grads,
               double lr, double sign) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("SgdUpdate: params/grads size mismatch");
  }
  for (size_t i = 0; i < params.size(); ++i) params[i] += sign * lr * grads[i];
}

}  // namespace mgid::agents
