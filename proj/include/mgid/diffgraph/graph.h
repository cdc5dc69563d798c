#ifndef MGID_DIFFGRAPH_GRAPH_H_
#define MGID_DIFFGRAPH_GRAPH_H_

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mgid::dg {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Thrown for malformed graphs: shape mismatches, unbound leaves,
// unreachable parameters and similar construction/evaluation errors.
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OpKind {
  kLeaf,      // parameter or input placeholder
  kConstant,  // fixed value, never differentiated
  kAdd,
  kSub,
  kMul,
  kDiv,
  kScale,
  kMatMul,
  kTranspose,
  kExp,
  kLog,
  kTanh,
  kSigmoid,
  kRelu,
  kClip,
  kMinimum,
  kSumAll,
  kSumRows,
  kSumCols,
  kMaxRows,
  kMaxAll,
  kGather,
  kConcatRows,
  kConcatCols,
  kSliceRows,
  kSliceCols,
  kCompare,
};

const char* OpName(OpKind kind);

enum class CompareMode { kGreater, kGreaterEqual, kLess, kLessEqual, kEqual };

struct Node {
  OpKind kind = OpKind::kConstant;
  std::vector<std::shared_ptr<Node>> parents;
  Matrix value;
  Index rows = 0;
  Index cols = 0;
  bool requires_grad = false;
  bool evaluated = false;
  // True when the node (transitively) depends on a rebindable leaf, so
  // Forward() must be able to recompute it.
  bool rebindable = false;

  // Op attributes. Meaning depends on kind: scale factor, clip bounds,
  // compare mode, gather indices, slice [begin, count].
  double attr_a = 0.0;
  double attr_b = 0.0;
  std::vector<Index> indices;

  std::string name;
};

using NodePtr = std::shared_ptr<Node>;

// Handle to a node in the computation graph. Cheap to copy.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const NodePtr& node() const { return node_; }
  Node* get() const { return node_.get(); }

  Index rows() const { return node_->rows; }
  Index cols() const { return node_->cols; }
  OpKind kind() const { return node_->kind; }
  bool requires_grad() const { return node_->requires_grad; }
  bool evaluated() const { return node_->evaluated; }
  const std::string& name() const { return node_->name; }

  // Throws GraphError if the node has not been evaluated.
  const Matrix& value() const;
  // Value of a 1x1 node.
  double scalar() const;

  // Overwrites the value of a leaf in place (parameter updates).
  void set_value(const Matrix& v);

 private:
  NodePtr node_;
};

// Leaf holding a fixed value. Never receives gradients.
Var Constant(Matrix value);
Var Scalar(double value);
Var Zeros(Index rows, Index cols);
Var Ones(Index rows, Index cols);
// Differentiable leaf.
Var Leaf(std::string name, Matrix value);
// Rebindable leaf without a value; must be bound before Forward().
Var Placeholder(std::string name, Index rows, Index cols,
                bool requires_grad = false);

// Copy of v's value that is cut off from the graph.
Var StopGradient(const Var& v);

// Recording switch. When disabled, new ops compute values only and keep
// no parents, so nothing built under the guard can be differentiated.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool on);
};

class NoGradGuard {
 public:
  NoGradGuard() : previous_(GradMode::enabled()) {
    GradMode::set_enabled(false);
  }
  ~NoGradGuard() { GradMode::set_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

class EnableGradGuard {
 public:
  explicit EnableGradGuard(bool on) : previous_(GradMode::enabled()) {
    GradMode::set_enabled(on);
  }
  ~EnableGradGuard() { GradMode::set_enabled(previous_); }
  EnableGradGuard(const EnableGradGuard&) = delete;
  EnableGradGuard& operator=(const EnableGradGuard&) = delete;

 private:
  bool previous_;
};

// Per-thread numeric diagnostics. A run owns its thread, so these are
// run-level counters.
struct Diagnostics {
  std::int64_t log_clamps = 0;
};
Diagnostics& ThreadDiagnostics();
void ResetDiagnostics();

inline constexpr double kLogFloor = 1e-12;

enum class ParamRole { kAgentPolicy, kAgentCritic, kDesigner, kDesignerCritic };

const char* RoleName(ParamRole role);

// A named, role-tagged differentiable leaf.
struct Parameter {
  std::string id;
  ParamRole role;
  Var var;
};

// Registry enforcing unique parameter identifiers within a run.
class ParameterStore {
 public:
  Parameter Add(std::string id, ParamRole role, Matrix value);
  Parameter Get(const std::string& id) const;
  bool Contains(const std::string& id) const;
  const std::vector<Parameter>& all() const { return params_; }

 private:
  std::vector<Parameter> params_;
};

}  // namespace mgid::dg

#endif  // MGID_DIFFGRAPH_GRAPH_H_
