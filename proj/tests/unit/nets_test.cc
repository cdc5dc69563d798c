#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "mgid/diffgraph/autodiff.h"
#include "mgid/diffgraph/ops.h"
#include "mgid/nets/checkpoint.h"
#include "mgid/nets/mlp.h"
#include "mgid/nets/policy.h"

namespace mgid::nets {
namespace {

std::vector<Matrix> ZeroParams(const Mlp& net) {
  std::vector<Matrix> params = net.InitParams();
  for (auto& p : params) p.setZero();
  return params;
}

Matrix RandomInput(Rng& rng, dg::Index rows, dg::Index cols, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (dg::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

TEST(MlpTest, ZeroWeightsSoftmaxIsUniform) {
  Mlp net({.layer_sizes = {4, 8, 3}, .head = HeadKind::kSoftmax});
  const Matrix out = net.ForwardValue(ZeroParams(net), Matrix::Ones(1, 4));
  for (int a = 0; a < 3; ++a) EXPECT_DOUBLE_EQ(out(0, a), 1.0 / 3.0);
}

TEST(MlpTest, ZeroWeightsScaledSigmoidIsMidpoint) {
  Mlp net({.layer_sizes = {5, 6, 3},
           .head = HeadKind::kScaledSigmoid,
           .lo = 0.0,
           .hi = 2.0});
  const Matrix out = net.ForwardValue(ZeroParams(net), Matrix::Ones(2, 5));
  EXPECT_TRUE(out.isApprox(Matrix::Ones(2, 3), 0.0));
}

TEST(MlpTest, SoftmaxRowsSumToOneAndArePositive) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Mlp net({.layer_sizes = {6, 16, 16, 5},
             .head = HeadKind::kSoftmax,
             .init_seed = static_cast<std::uint64_t>(trial)});
    const Matrix x = RandomInput(rng, 10, 6, 50.0);
    const Matrix out = net.ForwardValue(net.InitParams(), x);
    for (dg::Index r = 0; r < out.rows(); ++r) {
      EXPECT_NEAR(out.row(r).sum(), 1.0, 1e-12);
      EXPECT_GT(out.row(r).minCoeff(), 0.0);
    }
  }
}

TEST(MlpTest, ScaledSigmoidStrictBounds) {
  Rng rng(11);
  Mlp net({.layer_sizes = {3, 8, 4},
           .head = HeadKind::kScaledSigmoid,
           .lo = -1.0,
           .hi = 2.0,
           .init_seed = 3});
  std::vector<Matrix> params = net.InitParams();
  for (auto& p : params) p *= 40.0;  // saturate the sigmoid
  const Matrix x = RandomInput(rng, 500, 3, 100.0);
  const Matrix out = net.ForwardValue(params, x);
  EXPECT_GT(out.minCoeff(), -1.0);
  EXPECT_LT(out.maxCoeff(), 2.0);
  dg::Var y = net.Forward(ParamBlock::FromValues("n", dg::ParamRole::kDesigner,
                                                 net.ParamNames(), params)
                              .vars,
                          dg::Constant(x));
  EXPECT_GT(y.value().minCoeff(), -1.0);
  EXPECT_LT(y.value().maxCoeff(), 2.0);
}

TEST(MlpTest, InitIsSeedDeterministic) {
  MlpSpec spec{.layer_sizes = {4, 7, 2}, .init_seed = 42};
  const auto a = Mlp(spec).InitParams();
  const auto b = Mlp(spec).InitParams();
  spec.init_seed = 43;
  const auto c = Mlp(spec).InitParams();
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i] == b[i]);
  EXPECT_FALSE(a[0] == c[0]);
  const double bound = 0.5;  // 1/sqrt(4)
  EXPECT_LE(a[0].cwiseAbs().maxCoeff(), bound);
  EXPECT_TRUE(a[1].isZero(0.0));
}

TEST(MlpTest, GraphAndValueForwardAgree) {
  Rng rng(3);
  for (HeadKind head :
       {HeadKind::kSoftmax, HeadKind::kLinear, HeadKind::kScaledSigmoid}) {
    Mlp net({.layer_sizes = {5, 9, 4},
             .head = head,
             .lo = 0.0,
             .hi = 2.0,
             .init_seed = 9});
    ParamBlock block =
        ParamBlock::Create("net", dg::ParamRole::kAgentPolicy, net);
    const Matrix x = RandomInput(rng, 6, 5, 1.0);
    const Matrix graph = net.Forward(block.vars, dg::Constant(x)).value();
    const Matrix value = net.ForwardValue(block.values(), x);
    EXPECT_LE((graph - value).cwiseAbs().maxCoeff(), 1e-13) << HeadName(head);
  }
}

TEST(MlpTest, DimensionMismatchThrows) {
  Mlp net({.layer_sizes = {4, 8, 3}});
  EXPECT_THROW(net.ForwardValue(net.InitParams(), Matrix::Ones(1, 5)),
               std::invalid_argument);
  ParamBlock block = ParamBlock::Create("n", dg::ParamRole::kAgentPolicy, net);
  EXPECT_THROW(net.Forward(block.vars, dg::Constant(Matrix::Ones(1, 3))),
               std::invalid_argument);
}

TEST(MlpTest, SpecValidation) {
  EXPECT_THROW(Mlp({.layer_sizes = {4, 3}}), std::invalid_argument);
  EXPECT_THROW(Mlp({.layer_sizes = {4, 5, 3},
                    .head = HeadKind::kScaledSigmoid,
                    .lo = 2.0,
                    .hi = 2.0}),
               std::invalid_argument);
}

TEST(MlpTest, GradientMatchesFiniteDifference) {
  Mlp net({.layer_sizes = {3, 5, 4},
           .head = HeadKind::kScaledSigmoid,
           .lo = 0.0,
           .hi = 2.0,
           .init_seed = 5});
  ParamBlock block = ParamBlock::Create("n", dg::ParamRole::kDesigner, net);
  Rng rng(5);
  const Matrix x = RandomInput(rng, 4, 3, 1.0);
  const Matrix weights = RandomInput(rng, 4, 4, 1.0);
  auto loss = [&](std::span<const dg::Var> params) {
    return dg::SumAll(dg::Mul(net.Forward(params, dg::Constant(x)),
                              dg::Constant(weights)));
  };
  const auto grads = dg::Grad(loss(block.vars), block.vars);
  const auto base = block.values();
  const double h = 1e-6;
  for (size_t k = 0; k < base.size(); ++k) {
    for (dg::Index i = 0; i < base[k].size(); ++i) {
      auto eval = [&](double d) {
        std::vector<Matrix> p = base;
        p[k].data()[i] += d;
        Matrix out = net.ForwardValue(p, x);
        return (out.array() * weights.array()).sum();
      };
      const double fd = (eval(h) - eval(-h)) / (2 * h);
      EXPECT_NEAR(grads[k].value().data()[i], fd, 1e-6);
    }
  }
}

TEST(PolicyTest, MixtureArithmetic) {
  Eigen::RowVectorXd p(3);
  p << 0.5, 0.5, 0.0;
  const Eigen::RowVectorXd mixed = MixPolicy(p, 0.3);
  EXPECT_NEAR(mixed(0), 0.45, 1e-15);
  EXPECT_NEAR(mixed(1), 0.45, 1e-15);
  EXPECT_NEAR(mixed(2), 0.10, 1e-15);
}

TEST(PolicyTest, EpsOneIsUniformAndEpsZeroDegenerate) {
  Rng rng(1);
  Eigen::RowVectorXd det(3);
  det << 1.0, 0.0, 0.0;
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(SampleAction(det, rng, 0.0), 0);
  const Eigen::RowVectorXd mixed = MixPolicy(det, 1.0);
  for (int a = 0; a < 3; ++a) EXPECT_DOUBLE_EQ(mixed(a), 1.0 / 3.0);
}

TEST(PolicyTest, EpsOutOfRangeThrows) {
  Rng rng(1);
  Eigen::RowVectorXd p = Eigen::RowVectorXd::Constant(3, 1.0 / 3.0);
  EXPECT_THROW(SampleAction(p, rng, -0.01), std::invalid_argument);
  EXPECT_THROW(SampleAction(p, rng, 1.01), std::invalid_argument);
  EXPECT_THROW(MixedLogProbs(dg::Constant(Matrix::Zero(1, 3)), 2.0),
               std::invalid_argument);
}

TEST(PolicyTest, SamplingFrequenciesWithinThreeSigma) {
  Rng rng(2024);
  Eigen::RowVectorXd p(4);
  p << 0.6, 0.25, 0.15, 0.0;
  const double eps = 0.2;
  const Eigen::RowVectorXd mixed = MixPolicy(p, eps);
  const int n = 100000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) ++counts[SampleAction(p, rng, eps)];
  for (int a = 0; a < 4; ++a) {
    const double sigma = std::sqrt(n * mixed(a) * (1.0 - mixed(a)));
    EXPECT_LE(std::abs(counts[a] - n * mixed(a)), 3.0 * sigma) << a;
  }
}

TEST(PolicyTest, MixedLogProbNodeMatchesMixture) {
  Matrix logits(2, 3);
  logits << 0.3, -1.2, 2.0, 0.0, 0.0, 5.0;
  const double eps = 0.25;
  const std::vector<int> actions = {1, 2};
  dg::Var lp = ActionLogProbs(dg::Constant(logits), actions, eps);
  for (int r = 0; r < 2; ++r) {
    const Eigen::RowVectorXd mixed =
        MixPolicy(SoftmaxRow(logits.row(r)), eps);
    EXPECT_NEAR(lp.value()(r, 0), std::log(mixed(actions[r])), 1e-13);
  }
}

TEST(PolicyTest, LinearDecaySchedule) {
  LinearDecay d{.start = 0.5, .end = 0.1, .episodes = 100};
  EXPECT_DOUBLE_EQ(d.At(0), 0.5);
  EXPECT_DOUBLE_EQ(d.At(50), 0.3);
  EXPECT_DOUBLE_EQ(d.At(100), 0.1);
  EXPECT_DOUBLE_EQ(d.At(1000), 0.1);
}

TEST(CheckpointTest, RoundTripIsExact) {
  Rng rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    Checkpoint ckpt;
    const int n = 1 + trial % 4;
    for (int k = 0; k < n; ++k) {
      std::uniform_int_distribution<int> dim(1, 6);
      Matrix m = RandomInput(rng, dim(rng), dim(rng), std::pow(10.0, trial % 7 - 3));
      ckpt["block" + std::to_string(trial) + "/p" + std::to_string(k)] = m;
    }
    const Checkpoint back =
        CheckpointFromJson(nlohmann::json::parse(CheckpointToJson(ckpt).dump()));
    ASSERT_EQ(back.size(), ckpt.size());
    for (const auto& [key, m] : ckpt) {
      ASSERT_TRUE(back.count(key));
      EXPECT_TRUE(back.at(key) == m) << key;
    }
  }
}

TEST(CheckpointTest, FileRoundTripAndRestore) {
  Mlp net({.layer_sizes = {3, 4, 2}, .init_seed = 8});
  ParamBlock block = ParamBlock::Create("agent0", dg::ParamRole::kAgentPolicy, net);
  Checkpoint ckpt;
  AddBlock(ckpt, block);
  const auto path =
      (std::filesystem::temp_directory_path() / "mgid_nets_ckpt.json").string();
  SaveCheckpoint(path, ckpt);

  Mlp other({.layer_sizes = {3, 4, 2}, .init_seed = 9});
  ParamBlock restored =
      ParamBlock::Create("agent0", dg::ParamRole::kAgentPolicy, other);
  RestoreBlock(LoadCheckpoint(path), restored);
  for (size_t i = 0; i < block.vars.size(); ++i) {
    EXPECT_TRUE(restored.vars[i].value() == block.vars[i].value());
  }
  std::remove(path.c_str());

  Mlp wrong({.layer_sizes = {3, 5, 2}});
  ParamBlock bad = ParamBlock::Create("agent0", dg::ParamRole::kAgentPolicy, wrong);
  EXPECT_THROW(RestoreBlock(ckpt, bad), std::runtime_error);
}

}  // namespace
}  // namespace mgid::nets
