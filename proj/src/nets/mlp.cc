#include "mgid/nets/mlp.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include "mgid/diffgraph/autodiff.h"
#include "mgid/diffgraph/ops.h"

namespace mgid::nets {
namespace {

// Keeps sigmoid strictly inside (0, 1) in double precision.
constexpr double kSigmoidArgLimit = 30.0;
// Keeps softmax probabilities strictly positive.
constexpr double kMinLogProb = -700.0;

}  // namespace

const char* HeadName(HeadKind head) {
  switch (head) {
    case HeadKind::kSoftmax: return "softmax";
    case HeadKind::kLinear: return "linear";
    case HeadKind::kScaledSigmoid: return "scaled_sigmoid";
  }
  return "unknown";
}

void MlpSpec::Validate() const {
  if (layer_sizes.size() < 3) {
    throw std::invalid_argument("MlpSpec needs at least one hidden layer");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw std::invalid_argument("MlpSpec layer sizes must be > 0");
  }
  if (head == HeadKind::kScaledSigmoid && !(lo < hi)) {
    throw std::invalid_argument("scaled-sigmoid head requires lo < hi");
  }
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) { spec_.Validate(); }

std::vector<std::string> Mlp::ParamNames() const {
  std::vector<std::string> names;
  for (int k = 0; k < spec_.num_layers(); ++k) {
    names.push_back("w" + std::to_string(k));
    names.push_back("b" + std::to_string(k));
  }
  return names;
}

std::vector<Matrix> Mlp::InitParams() const {
  std::mt19937_64 rng(spec_.init_seed);
  std::vector<Matrix> params;
  for (int k = 0; k < spec_.num_layers(); ++k) {
    const int fan_in = spec_.layer_sizes[k];
    const int fan_out = spec_.layer_sizes[k + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix w(fan_in, fan_out);
    for (dg::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    params.push_back(std::move(w));
    params.push_back(Matrix::Zero(1, fan_out));
  }
  return params;
}

void Mlp::CheckParams(size_t count, dg::Index input_cols) const {
  if (count != static_cast<size_t>(2 * spec_.num_layers())) {
    throw std::invalid_argument("Mlp: wrong number of parameter tensors");
  }
  if (input_cols != spec_.input_size()) {
    throw std::invalid_argument("Mlp: input has " + std::to_string(input_cols) +
                                " columns, expected " +
                                std::to_string(spec_.input_size()));
  }
}

dg::Var Mlp::Logits(std::span<const dg::Var> params,
                    const dg::Var& input) const {
  CheckParams(params.size(), input.cols());
  dg::Var h = input;
  for (int k = 0; k < spec_.num_layers(); ++k) {
    h = dg::Add(dg::MatMul(h, params[2 * k]), params[2 * k + 1]);
    if (k + 1 < spec_.num_layers()) h = dg::Relu(h);
  }
  return h;
}

Matrix Mlp::LogitsValue(std::span<const Matrix> params,
                        const Matrix& input) const {
  CheckParams(params.size(), input.cols());
  Matrix h = input;
  for (int k = 0; k < spec_.num_layers(); ++k) {
    Matrix next = h * params[2 * k];
    next.rowwise() += params[2 * k + 1].row(0);
    if (k + 1 < spec_.num_layers()) next = next.array().max(0.0).matrix();
    h = std::move(next);
  }
  return h;
}

dg::Var Mlp::Forward(std::span<const dg::Var> params,
                     const dg::Var& input) const {
  return ApplyHead(spec_.head, spec_.lo, spec_.hi, Logits(params, input));
}

Matrix Mlp::ForwardValue(std::span<const Matrix> params,
                         const Matrix& input) const {
  return ApplyHeadValue(spec_.head, spec_.lo, spec_.hi,
                        LogitsValue(params, input));
}

dg::Var LinearModel::Logits(std::span<const dg::Var> params,
                            const dg::Var& input) const {
  if (params.size() != 1 || input.cols() != input_size_) {
    throw std::invalid_argument("LinearModel: bad parameters or input");
  }
  return dg::MatMul(input, params[0]);
}

Matrix LinearModel::LogitsValue(std::span<const Matrix> params,
                                const Matrix& input) const {
  if (params.size() != 1 || input.cols() != input_size_) {
    throw std::invalid_argument("LinearModel: bad parameters or input");
  }
  return input * params[0];
}

dg::Var ApplyHead(HeadKind head, double lo, double hi, const dg::Var& logits) {
  switch (head) {
    case HeadKind::kSoftmax:
      return dg::Exp(dg::Clip(dg::LogSoftmax(logits), kMinLogProb, 0.0));
    case HeadKind::kLinear:
      return logits;
    case HeadKind::kScaledSigmoid: {
      dg::Var s = dg::Sigmoid(dg::Clip(logits, -kSigmoidArgLimit, kSigmoidArgLimit));
      return dg::AddScalar(dg::Scale(s, hi - lo), lo);
    }
  }
  throw std::invalid_argument("unknown head");
}

Matrix ApplyHeadValue(HeadKind head, double lo, double hi,
                      const Matrix& logits) {
  switch (head) {
    case HeadKind::kSoftmax: {
      Matrix out(logits.rows(), logits.cols());
      for (dg::Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        const Eigen::RowVectorXd shifted = logits.row(r).array() - m;
        const double log_norm = std::log(shifted.array().exp().sum());
        out.row(r) =
            (shifted.array() - log_norm).max(kMinLogProb).min(0.0).exp().matrix();
      }
      return out;
    }
    case HeadKind::kLinear:
      return logits;
    case HeadKind::kScaledSigmoid: {
      const Eigen::ArrayXXd z =
          logits.array().max(-kSigmoidArgLimit).min(kSigmoidArgLimit);
      return (lo + (hi - lo) / (1.0 + (-z).exp())).matrix();
    }
  }
  throw std::invalid_argument("unknown head");
}

PolicyOutput MlpForward(const Mlp& net, std::span<const dg::Var> params,
                        const dg::Var& input) {
  return PolicyOutput{net.spec().head, net.Forward(params, input)};
}

ParamBlock ParamBlock::Create(std::string prefix, dg::ParamRole role,
                              const Model& model) {
  return FromValues(std::move(prefix), role, model.ParamNames(),
                    model.InitParams());
}

ParamBlock ParamBlock::FromValues(std::string prefix, dg::ParamRole role,
                                  std::vector<std::string> names,
                                  const std::vector<Matrix>& values) {
  if (names.size() != values.size()) {
    throw std::invalid_argument("ParamBlock: names/values size mismatch");
  }
  ParamBlock block;
  block.prefix = std::move(prefix);
  block.role = role;
  block.names = std::move(names);
  for (size_t i = 0; i < values.size(); ++i) {
    block.vars.push_back(dg::Leaf(block.full_name(i), values[i]));
  }
  return block;
}

std::vector<Matrix> ParamBlock::values() const { return dg::Values(vars); }

void ParamBlock::Assign(std::span<const Matrix> values) {
  if (values.size() != vars.size()) {
    throw std::invalid_argument("ParamBlock::Assign: size mismatch");
  }
  // Fresh leaves: graphs built on the previous values stay valid.
  for (size_t i = 0; i < vars.size(); ++i) {
    if (values[i].rows() != vars[i].rows() || values[i].cols() != vars[i].cols()) {
      throw std::invalid_argument("ParamBlock::Assign: shape mismatch for " +
                                  full_name(i));
    }
    vars[i] = dg::Leaf(full_name(i), values[i]);
  }
}

}  // namespace mgid::nets
