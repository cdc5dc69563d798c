#ifndef MGID_NETS_MLP_H_
#define MGID_NETS_MLP_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mgid/diffgraph/graph.h"

namespace mgid::nets {

using dg::Matrix;

enum class HeadKind { kSoftmax, kLinear, kScaledSigmoid };

const char* HeadName(HeadKind head);

struct MlpSpec {
  // Input size, one or more hidden sizes, output size.
  std::vector<int> layer_sizes;
  HeadKind head = HeadKind::kSoftmax;
  // Output range of the scaled-sigmoid head.
  double lo = 0.0;
  double hi = 1.0;
  std::uint64_t init_seed = 0;

  // Throws std::invalid_argument.
  void Validate() const;
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
};

// Anything that maps (parameters, input rows) to per-row logits or raw
// outputs. Parameters are passed explicitly so updated, graph-linked
// parameters can be substituted for the leaves.
class Model {
 public:
  virtual ~Model() = default;
  virtual int input_size() const = 0;
  virtual int output_size() const = 0;
  virtual std::vector<std::string> ParamNames() const = 0;
  virtual std::vector<Matrix> InitParams() const = 0;
  // Pre-head outputs, one row per input row.
  virtual dg::Var Logits(std::span<const dg::Var> params,
                         const dg::Var& input) const = 0;
  // Same computation on plain values, no graph.
  virtual Matrix LogitsValue(std::span<const Matrix> params,
                             const Matrix& input) const = 0;
};

// Dense ReLU network. Parameters are ordered w0, b0, w1, b1, ... with
// w_k of shape fan_in x fan_out and b_k of shape 1 x fan_out.
class Mlp : public Model {
 public:
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  int input_size() const override { return spec_.input_size(); }
  int output_size() const override { return spec_.output_size(); }
  std::vector<std::string> ParamNames() const override;
  // Weights uniform in +-1/sqrt(fan_in) from spec.init_seed, biases zero.
  std::vector<Matrix> InitParams() const override;

  dg::Var Logits(std::span<const dg::Var> params,
                 const dg::Var& input) const override;
  Matrix LogitsValue(std::span<const Matrix> params,
                     const Matrix& input) const override;

  // Logits followed by the configured head.
  dg::Var Forward(std::span<const dg::Var> params, const dg::Var& input) const;
  Matrix ForwardValue(std::span<const Matrix> params, const Matrix& input) const;

 private:
  void CheckParams(size_t count, dg::Index input_cols) const;

  MlpSpec spec_;
};

// Linear map without bias: logits = input * w. With one-hot inputs this is
// a tabular policy.
class LinearModel : public Model {
 public:
  LinearModel(int input_size, int output_size)
      : input_size_(input_size), output_size_(output_size) {}
  int input_size() const override { return input_size_; }
  int output_size() const override { return output_size_; }
  std::vector<std::string> ParamNames() const override { return {"w"}; }
  std::vector<Matrix> InitParams() const override {
    return {Matrix::Zero(input_size_, output_size_)};
  }
  dg::Var Logits(std::span<const dg::Var> params,
                 const dg::Var& input) const override;
  Matrix LogitsValue(std::span<const Matrix> params,
                     const Matrix& input) const override;

 private:
  int input_size_;
  int output_size_;
};

// Applies a head to pre-head outputs.
dg::Var ApplyHead(HeadKind head, double lo, double hi, const dg::Var& logits);
Matrix ApplyHeadValue(HeadKind head, double lo, double hi, const Matrix& logits);

// Result of running a network forward: softmax probabilities, raw linear
// outputs or a bounded vector, one row per input row.
struct PolicyOutput {
  HeadKind head;
  dg::Var node;
};

PolicyOutput MlpForward(const Mlp& net, std::span<const dg::Var> params,
                        const dg::Var& input);

// Owned, named leaves of one model.
struct ParamBlock {
  std::string prefix;
  dg::ParamRole role = dg::ParamRole::kAgentPolicy;
  std::vector<std::string> names;
  std::vector<dg::Var> vars;

  static ParamBlock Create(std::string prefix, dg::ParamRole role,
                           const Model& model);
  static ParamBlock FromValues(std::string prefix, dg::ParamRole role,
                               std::vector<std::string> names,
                               const std::vector<Matrix>& values);
  std::vector<Matrix> values() const;
  // Replaces every leaf with a new one holding the given value; graphs built
  // on the old leaves keep their values.
  void Assign(std::span<const Matrix> values);
  std::string full_name(size_t i) const { return prefix + "/" + names[i]; }
};

}  // namespace mgid::nets

#endif  // MGID_NETS_MLP_H_
