#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "mgid/diffgraph/autodiff.h"
#include "mgid/diffgraph/ops.h"

namespace mgid::dg {
namespace {

using Builder = std::function<Var(const std::vector<Var>&)>;

Matrix RandomMatrix(std::mt19937_64& rng, Index rows, Index cols,
                    double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Central finite differences of a scalar builder w.r.t. every entry of
// every input. Independent of the reverse-mode path.
std::vector<Matrix> FiniteDifference(const Builder& f,
                                     const std::vector<Matrix>& inputs,
                                     double eps = 1e-5) {
  std::vector<Matrix> grads;
  for (size_t k = 0; k < inputs.size(); ++k) {
    Matrix g(inputs[k].rows(), inputs[k].cols());
    for (Index i = 0; i < inputs[k].size(); ++i) {
      auto eval = [&](double delta) {
        NoGradGuard no_grad;
        std::vector<Var> vars;
        for (size_t j = 0; j < inputs.size(); ++j) {
          Matrix v = inputs[j];
          if (j == k) v.data()[i] += delta;
          vars.push_back(Constant(v));
        }
        return f(vars).scalar();
      };
      g.data()[i] = (eval(eps) - eval(-eps)) / (2 * eps);
    }
    grads.push_back(g);
  }
  return grads;
}

double RelErr(const Matrix& a, const Matrix& b) {
  const double denom = std::max({a.norm(), b.norm(), 1e-8});
  return (a - b).norm() / denom;
}

TEST(ForwardTest, HandEvaluatedExamples) {
  Var x = Placeholder("x", 1, 1);
  Var y = Placeholder("y", 1, 1);
  Var square = Mul(x, x);
  Var xy2 = Mul(x, Mul(y, y));
  Bindings b;
  b.Bind(x, Matrix::Constant(1, 1, 3.0));
  EXPECT_DOUBLE_EQ(Forward(square, b)(0, 0), 9.0);
  b.Bind(x, Matrix::Constant(1, 1, 2.0)).Bind(y, Matrix::Constant(1, 1, 3.0));
  EXPECT_DOUBLE_EQ(Forward(xy2, b)(0, 0), 18.0);
  EXPECT_DOUBLE_EQ(Sigmoid(Scalar(0.0)).scalar(), 0.5);
}

TEST(ForwardTest, UnboundLeafAndShapeMismatchThrow) {
  Var x = Placeholder("x", 2, 2);
  Var out = SumAll(Exp(x));
  EXPECT_THROW(Forward(out, Bindings{}), GraphError);
  Bindings b;
  EXPECT_THROW(b.Bind(x, Matrix::Zero(3, 2)), GraphError);
  EXPECT_THROW(Add(Zeros(2, 3), Zeros(3, 2)), GraphError);
  EXPECT_THROW(MatMul(Zeros(2, 3), Zeros(2, 3)), GraphError);
}

TEST(ForwardTest, ReevaluationIsBitIdentical) {
  std::mt19937_64 rng(7);
  Var x = Placeholder("x", 4, 3);
  Var w = Leaf("w", RandomMatrix(rng, 3, 2));
  Var out = SumAll(Tanh(MatMul(Sigmoid(x), w)));
  const Matrix xv = RandomMatrix(rng, 4, 3);
  Bindings b;
  b.Bind(x, xv);
  const Matrix first = Forward(out, b);
  const Matrix second = Forward(out, b);
  EXPECT_EQ(first(0, 0), second(0, 0));
}

TEST(GradTest, PowerAndProductRule) {
  Var x = Leaf("x", Matrix::Constant(1, 1, 3.0));
  EXPECT_DOUBLE_EQ(Grad(Mul(x, x), std::vector{x})[0].scalar(), 6.0);

  Var a = Leaf("a", Matrix::Constant(1, 1, 2.0));
  Var b = Leaf("b", Matrix::Constant(1, 1, 3.0));
  EXPECT_DOUBLE_EQ(Grad(Mul(a, Mul(b, b)), std::vector{b})[0].scalar(), 12.0);
}

TEST(GradTest, MixedPartialOfNegativeSquaredDistanceIsTwo) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    Var theta = Leaf("theta", RandomMatrix(rng, 1, 1));
    Var eta = Leaf("eta", RandomMatrix(rng, 1, 1));
    Var f = Neg(Square(Sub(theta, eta)));
    Var dtheta = Grad(f, std::vector{theta}, {.create_graph = true})[0];
    EXPECT_DOUBLE_EQ(Grad(dtheta, std::vector{eta})[0].scalar(), 2.0);
  }
}

TEST(GradTest, NonScalarOutputAndUnreachableParameterThrow) {
  Var x = Leaf("x", Matrix::Ones(2, 2));
  Var y = Leaf("y", Matrix::Ones(1, 1));
  EXPECT_THROW(Grad(Exp(x), std::vector{x}), GraphError);
  EXPECT_THROW(Grad(SumAll(x), std::vector{y}), GraphError);
  const auto g = Grad(SumAll(x), std::vector{y}, {.allow_unused = true});
  EXPECT_EQ(g[0].scalar(), 0.0);
}

TEST(GradTest, EveryDifferentiableOpMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  const std::vector<std::pair<const char*, Builder>> cases = {
      {"add_broadcast_row",
       [](const auto& v) { return SumAll(Mul(Add(v[0], v[1]), v[0])); }},
      {"sub_broadcast_col",
       [](const auto& v) { return SumAll(Square(Sub(v[0], v[2]))); }},
      {"mul_scalar", [](const auto& v) { return SumAll(Mul(v[0], v[3])); }},
      {"div",
       [](const auto& v) {
         return SumAll(Div(v[0], AddScalar(Square(v[0]), 1.0)));
       }},
      {"matmul_transpose",
       [](const auto& v) {
         return SumAll(Tanh(MatMul(v[0], Transpose(v[0]))));
       }},
      {"exp", [](const auto& v) { return SumAll(Mul(Exp(v[0]), v[0])); }},
      {"log", [](const auto& v) { return SumAll(Log(AddScalar(Square(v[0]), 0.5))); }},
      {"sigmoid", [](const auto& v) { return SumAll(Square(Sigmoid(v[0]))); }},
      {"relu", [](const auto& v) { return SumAll(Mul(Relu(v[0]), v[0])); }},
      {"clip", [](const auto& v) { return SumAll(Square(Clip(v[0], -1.0, 1.0))); }},
      {"minimum",
       [](const auto& v) { return SumAll(Minimum(Square(v[0]), Scale(v[0], 3.0))); }},
      {"sum_rows_cols",
       [](const auto& v) {
         return SumAll(Mul(SumRows(Square(v[0])), SumRows(v[0])));
       }},
      {"sum_cols", [](const auto& v) { return SumAll(Square(SumCols(v[0]))); }},
      {"max_rows", [](const auto& v) { return SumAll(Square(MaxRows(v[0]))); }},
      {"max_all", [](const auto& v) { return Square(MaxAll(v[0])); }},
      {"gather",
       [](const auto& v) {
         const std::vector<Index> idx = {2, 0, 1};
         return SumAll(Square(Gather(v[0], idx)));
       }},
      {"concat_slice",
       [](const auto& v) {
         std::vector<Var> parts = {v[0], Square(v[0])};
         Var rows = ConcatRows(parts);
         std::vector<Var> cols = {SliceRows(rows, 1, 4), SliceRows(rows, 2, 4)};
         return SumAll(Tanh(SliceCols(ConcatCols(cols), 1, 4)));
       }},
      {"log_softmax", [](const auto& v) { return SumAll(Square(LogSoftmax(v[0]))); }},
  };
  for (const auto& [name, f] : cases) {
    SCOPED_TRACE(name);
    // Inputs: 3x3 matrix, 1x3 row, 3x1 column, 1x1 scalar.
    std::vector<Matrix> inputs = {RandomMatrix(rng, 3, 3), RandomMatrix(rng, 1, 3),
                                  RandomMatrix(rng, 3, 1), RandomMatrix(rng, 1, 1)};
    // Keep clip and relu evaluation points away from kinks.
    for (Index i = 0; i < inputs[0].size(); ++i) {
      double& x = inputs[0].data()[i];
      if (std::abs(x) < 1e-3 || std::abs(std::abs(x) - 1.0) < 1e-3) x += 0.01;
    }
    // Finite differences only see the inputs a builder uses.
    std::vector<Var> leaves;
    for (size_t k = 0; k < inputs.size(); ++k) {
      leaves.push_back(Leaf("x" + std::to_string(k), inputs[k]));
    }
    const Var out = f(leaves);
    const auto grads = Grad(out, leaves, {.allow_unused = true});
    const auto fd = FiniteDifference(f, inputs);
    for (size_t k = 0; k < inputs.size(); ++k) {
      EXPECT_LE(RelErr(grads[k].value(), fd[k]), 1e-5) << "input " << k;
    }
  }
}

TEST(GradTest, MixedPartialsCommuteOnRandomPolynomials) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double c[6] = {u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    Var x = Leaf("x", Matrix::Constant(1, 1, u(rng)));
    Var y = Leaf("y", Matrix::Constant(1, 1, u(rng)));
    // c0 x^3 y + c1 x^2 y^2 + c2 x y^3 + c3 x y + c4 x^2 + c5 y^4
    Var x2 = Square(x), y2 = Square(y);
    Var f = Add(Add(Add(Scale(Mul(Mul(x2, x), y), c[0]), Scale(Mul(x2, y2), c[1])),
                    Add(Scale(Mul(x, Mul(y2, y)), c[2]), Scale(Mul(x, y), c[3]))),
                Add(Scale(x2, c[4]), Scale(Square(y2), c[5])));
    Var fx = Grad(f, std::vector{x}, {.create_graph = true})[0];
    Var fy = Grad(f, std::vector{y}, {.create_graph = true})[0];
    const double fxy = Grad(fx, std::vector{y})[0].scalar();
    const double fyx = Grad(fy, std::vector{x})[0].scalar();
    EXPECT_LE(std::abs(fxy - fyx), 1e-8 * std::max(1.0, std::abs(fxy)));
  }
}

TEST(GradTest, ClipGradientIsExactlyZeroOutsideAndOneInside) {
  Matrix x(1, 4);
  x << -3.0, -0.5, 0.5, 3.0;
  Var v = Leaf("v", x);
  const Matrix g = Grad(SumAll(Clip(v, -1.0, 1.0)), std::vector{v})[0].value();
  EXPECT_EQ(g(0, 0), 0.0);
  EXPECT_EQ(g(0, 1), 1.0);
  EXPECT_EQ(g(0, 2), 1.0);
  EXPECT_EQ(g(0, 3), 0.0);
}

TEST(GradTest, ReduceMaxTieRoutesToLowestIndex) {
  Var v = Leaf("v", (Matrix(1, 3) << 2.0, 2.0, 1.0).finished());
  const Matrix g = Grad(SumAll(MaxRows(v)), std::vector{v})[0].value();
  EXPECT_EQ(g(0, 0), 1.0);
  EXPECT_EQ(g(0, 1), 0.0);
  EXPECT_EQ(g(0, 2), 0.0);
}

TEST(GradTest, LogClampIsCountedAndHasZeroGradient) {
  ResetDiagnostics();
  Var v = Leaf("v", (Matrix(1, 2) << 0.0, 2.0).finished());
  Var out = SumAll(Log(v));
  EXPECT_EQ(ThreadDiagnostics().log_clamps, 1);
  EXPECT_DOUBLE_EQ(out.scalar(), std::log(kLogFloor) + std::log(2.0));
  const Matrix g = Grad(out, std::vector{v})[0].value();
  EXPECT_EQ(g(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(g(0, 1), 0.5);
}

TEST(GradTest, DeterministicGradients) {
  auto run = [] {
    std::mt19937_64 rng(99);
    Var w = Leaf("w", RandomMatrix(rng, 5, 4));
    Var x = Constant(RandomMatrix(rng, 6, 5));
    Var out = SumAll(LogSoftmax(MatMul(x, w)));
    return Grad(Square(out), std::vector{w})[0].value();
  };
  const Matrix a = run();
  const Matrix b = run();
  EXPECT_EQ(a, b);
}

// Toy bilevel: theta_hat = theta + alpha * d/dtheta[-(theta - eta)^2],
// J = -(theta_hat - c)^2.
Var ToyOuter(const Var& theta, const Var& eta, double alpha, double c,
             bool create_graph) {
  Var inner = Neg(Square(Sub(theta, eta)));
  Var step = Grad(inner, std::vector{theta}, {.create_graph = create_graph})[0];
  Var theta_hat = Add(theta, Scale(step, alpha));
  return Neg(Square(AddScalar(theta_hat, -c)));
}

TEST(GradThroughUpdateTest, ToyBilevelClosedForm) {
  Var theta = Leaf("theta", Matrix::Constant(1, 1, 0.0));
  Var eta = Leaf("eta", Matrix::Constant(1, 1, 1.0));
  const Var outer = ToyOuter(theta, eta, 0.1, 1.0, true);
  EXPECT_NEAR(GradThroughUpdate(outer, std::vector{eta})[0].scalar(), 0.32,
              1e-15);
}

TEST(GradThroughUpdateTest, NoLearningGivesZero) {
  Var theta = Leaf("theta", Matrix::Constant(1, 1, 0.0));
  Var eta = Leaf("eta", Matrix::Constant(1, 1, 1.0));
  const Var outer = ToyOuter(theta, eta, 0.0, 1.0, true);
  EXPECT_EQ(GradThroughUpdate(outer, std::vector{eta})[0].scalar(), 0.0);
}

TEST(GradThroughUpdateTest, MatchesFiniteDifferences) {
  const double eps = 1e-5;
  auto outer_value = [](double eta_value) {
    Var theta = Leaf("theta", Matrix::Constant(1, 1, 0.0));
    Var eta = Constant(Matrix::Constant(1, 1, eta_value));
    return ToyOuter(theta, eta, 0.1, 1.0, false).scalar();
  };
  const double fd = (outer_value(1.0 + eps) - outer_value(1.0 - eps)) / (2 * eps);
  Var theta = Leaf("theta", Matrix::Constant(1, 1, 0.0));
  Var eta = Leaf("eta", Matrix::Constant(1, 1, 1.0));
  const double analytic =
      GradThroughUpdate(ToyOuter(theta, eta, 0.1, 1.0, true), std::vector{eta})[0]
          .scalar();
  EXPECT_LE(std::abs(analytic - fd) / std::abs(analytic), 1e-6);
}

TEST(GradThroughUpdateTest, SeveredDependenceThrows) {
  Var theta = Leaf("theta", Matrix::Constant(1, 1, 0.0));
  Var eta = Leaf("eta", Matrix::Constant(1, 1, 1.0));
  const Var outer = ToyOuter(theta, eta, 0.1, 1.0, false);
  EXPECT_THROW(GradThroughUpdate(outer, std::vector{eta}), GraphError);
}

TEST(ParameterStoreTest, RejectsDuplicateIds) {
  ParameterStore store;
  store.Add("agent0/w0", ParamRole::kAgentPolicy, Matrix::Zero(2, 2));
  EXPECT_THROW(store.Add("agent0/w0", ParamRole::kDesigner, Matrix::Zero(1, 1)),
               GraphError);
  EXPECT_EQ(store.Get("agent0/w0").role, ParamRole::kAgentPolicy);
}

}  // namespace
}  // namespace mgid::dg
