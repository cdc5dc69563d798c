#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mgid/agents/learners.h"
#include "mgid/diffgraph/autodiff.h"
#include "mgid/diffgraph/ops.h"
#include "mgid/nets/policy.h"

namespace mgid::agents {
namespace {

using nets::LinearModel;
using nets::Mlp;

Matrix Random(Rng& rng, Eigen::Index r, Eigen::Index c, double s = 1.0) {
  std::normal_distribution<double> n(0.0, s);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Two episodes (lengths 3 and 2) with random observations and rewards.
AgentTrajectorySlice RandomSlice(Rng& rng, int obs_dim, int actions) {
  AgentTrajectorySlice s;
  s.obs = Random(rng, 5, obs_dim);
  s.next_obs = Random(rng, 5, obs_dim);
  std::uniform_int_distribution<int> a(0, actions - 1);
  for (int t = 0; t < 5; ++t) s.actions.push_back(a(rng));
  s.env_rewards = Random(rng, 5, 1).col(0);
  s.dones = {0, 0, 1, 0, 1};
  return s;
}

// Incentive model used by the linkage tests: sigmoid(obs * eta), T x 1.
dg::Var Incentives(const Matrix& obs, const dg::Var& eta) {
  return dg::Sigmoid(dg::MatMul(dg::Constant(obs), eta));
}

struct Fixture {
  Mlp policy{{.layer_sizes = {3, 6, 3}, .init_seed = 4}};
  Mlp critic{{.layer_sizes = {3, 5, 1},
              .head = nets::HeadKind::kLinear,
              .init_seed = 5}};
  Mlp q{{.layer_sizes = {3, 6, 3},
         .head = nets::HeadKind::kLinear,
         .init_seed = 6}};
  LearnerModels Models(AgentKind kind) const {
    if (kind == AgentKind::kQSoftmax) return {&q, nullptr};
    return {&policy, &critic};
  }
};

AgentHyper HyperFor(AgentKind kind) {
  AgentHyper h;
  h.kind = kind;
  h.lr = 0.3;
  h.critic_lr = 0.1;
  h.gamma = 0.9;
  h.gae_lambda = 0.8;
  h.entropy_coef = 0.05;
  h.target_rate = 0.5;
  h.q_temperature = 2.0;
  return h;
}

const AgentKind kAllKinds[] = {AgentKind::kPolicyGradient,
                               AgentKind::kActorCritic, AgentKind::kPpo,
                               AgentKind::kQSoftmax};

TEST(TrajectoryTest, ValidationErrors) {
  AgentTrajectorySlice empty;
  EXPECT_THROW(empty.Validate(), std::invalid_argument);
  Rng rng(1);
  AgentTrajectorySlice s = RandomSlice(rng, 3, 3);
  s.dones.back() = 0;
  EXPECT_THROW(s.Validate(), std::invalid_argument);
  s = RandomSlice(rng, 3, 3);
  s.env_rewards(1) = std::nan("");
  EXPECT_THROW(s.Validate(), std::invalid_argument);
}

TEST(TrajectoryTest, TotalRewardWithoutIncentivesIsEnvReward) {
  Rng rng(2);
  AgentTrajectorySlice s = RandomSlice(rng, 3, 3);
  EXPECT_TRUE(TotalReward(s).value().col(0) == s.env_rewards);
  s.incentives = dg::Zeros(5, 1);
  EXPECT_TRUE(TotalReward(s).value().col(0) == s.env_rewards);
}

TEST(ReturnsTest, GaeHandExample) {
  Eigen::VectorXd delta(2);
  delta << 0.5, -0.2;
  const std::vector<std::uint8_t> dones = {0, 1};
  EXPECT_NEAR(GaeValue(delta, dones, 1.0, 1.0)(0), 0.3, 1e-15);
  EXPECT_NEAR(Gae(dg::Constant(Matrix(delta)), dones, 1.0, 1.0).value()(0, 0),
              0.3, 1e-15);
}

TEST(ReturnsTest, SingleTransitionGae) {
  // A_0 = r + gamma V(s1) - V(s0) whatever lambda is.
  const double r = 1.5, gamma = 0.9, v0 = 0.4, v1 = 2.0;
  Eigen::VectorXd delta(1);
  delta << r + gamma * v1 - v0;
  const std::vector<std::uint8_t> dones = {1};
  for (double lambda : {0.0, 0.3, 1.0}) {
    EXPECT_DOUBLE_EQ(GaeValue(delta, dones, gamma, lambda)(0),
                     r + gamma * v1 - v0);
  }
}

TEST(ReturnsTest, GaeLambdaOneEqualsMonteCarloAdvantage) {
  Rng rng(3);
  const double gamma = 0.93;
  for (int trial = 0; trial < 20; ++trial) {
    const int t_len = 12;
    std::vector<std::uint8_t> dones(t_len, 0);
    dones[4] = dones[7] = dones[t_len - 1] = 1;
    const Eigen::VectorXd r = Random(rng, t_len, 1).col(0);
    const Eigen::VectorXd v = Random(rng, t_len + 1, 1).col(0);
    Eigen::VectorXd delta(t_len);
    for (int t = 0; t < t_len; ++t) {
      const double next = dones[t] ? 0.0 : v(t + 1);
      delta(t) = r(t) + gamma * next - v(t);
    }
    const Eigen::VectorXd gae = GaeValue(delta, dones, gamma, 1.0);
    const Eigen::VectorXd gae_graph =
        Gae(dg::Constant(Matrix(delta)), dones, gamma, 1.0).value().col(0);
    // Monte-Carlo: brute-force discounted sums per step.
    for (int t = 0; t < t_len; ++t) {
      double g = 0.0, w = 1.0;
      for (int l = t; l < t_len; ++l) {
        g += w * r(l);
        w *= gamma;
        if (dones[l]) break;
      }
      EXPECT_NEAR(gae(t), g - v(t), 1e-10);
      EXPECT_NEAR(gae_graph(t), g - v(t), 1e-10);
    }
  }
}

TEST(PgUpdateTest, ZeroLearningRateLeavesThetaUnchanged) {
  Fixture f;
  Rng rng(5);
  AgentTrajectorySlice s = RandomSlice(rng, 3, 3);
  for (AgentKind kind : kAllKinds) {
    AgentHyper h = HyperFor(kind);
    h.lr = 0.0;
    LearnerState state = MakeLearner("a", f.Models(kind), h);
    const auto before = state.policy.values();
    UpdateResult r = UpdateLearner(f.Models(kind), state, s, h, false);
    const auto after = dg::Values(r.theta_hat);
    for (size_t i = 0; i < before.size(); ++i) {
      EXPECT_TRUE(before[i] == after[i]) << AgentKindName(kind);
    }
  }
}

TEST(PgUpdateTest, ZeroRewardsLeaveThetaUnchanged) {
  Fixture f;
  Rng rng(6);
  AgentTrajectorySlice s = RandomSlice(rng, 3, 3);
  s.env_rewards.setZero();
  AgentHyper h = HyperFor(AgentKind::kPolicyGradient);
  h.entropy_coef = 0.0;
  LearnerState state = MakeLearner("a", f.Models(h.kind), h);
  UpdateResult r = UpdateLearner(f.Models(h.kind), state, s, h, false);
  const auto before = state.policy.values();
  const auto after = dg::Values(r.theta_hat);
  for (size_t i = 0; i < before.size(); ++i) EXPECT_TRUE(before[i] == after[i]);
}

TEST(PgUpdateTest, OneStepTabularHandComputed) {
  // One state, two actions, zero logits; action 0 earns 1. The gradient of
  // log pi(0) w.r.t. the logits is (1 - 0.5, -0.5).
  LinearModel table(1, 2);
  nets::ParamBlock theta =
      nets::ParamBlock::Create("t", dg::ParamRole::kAgentPolicy, table);
  AgentTrajectorySlice s;
  s.obs = Matrix::Ones(1, 1);
  s.next_obs = Matrix::Ones(1, 1);
  s.actions = {0};
  s.env_rewards = Eigen::VectorXd::Ones(1);
  s.dones = {1};
  AgentHyper h;
  h.lr = 0.1;
  UpdateResult r = PgUpdate(table, theta.vars, s, h, false);
  const Matrix w = r.theta_hat[0].value();
  EXPECT_NEAR(w(0, 0), 0.05, 1e-15);
  EXPECT_NEAR(w(0, 1), -0.05, 1e-15);
  const Eigen::RowVectorXd p = nets::SoftmaxRow(w.row(0));
  EXPECT_GT(p(0), 0.5);
}

TEST(PgUpdateTest, EmptyTrajectoryThrows) {
  Fixture f;
  AgentHyper h;
  nets::ParamBlock theta =
      nets::ParamBlock::Create("t", dg::ParamRole::kAgentPolicy, f.policy);
  EXPECT_THROW(PgUpdate(f.policy, theta.vars, AgentTrajectorySlice{}, h, false),
               std::invalid_argument);
}

TEST(ActorCriticTest, PerfectCriticLeavesActorUnchanged) {
  // Deterministic one-step task: V(o) equals the reward, so TD errors are 0.
  LinearModel table(1, 2);
  LinearModel critic(1, 1);
  AgentHyper h;
  h.kind = AgentKind::kActorCritic;
  h.lr = 0.5;
  LearnerState state = MakeLearner("a", {&table, &critic}, h);
  state.critic = {Matrix::Constant(1, 1, 2.0)};
  state.target = state.critic;
  AgentTrajectorySlice s;
  s.obs = Matrix::Ones(3, 1);
  s.next_obs = Matrix::Ones(3, 1);
  s.actions = {0, 1, 0};
  s.env_rewards = Eigen::VectorXd::Constant(3, 2.0);
  s.dones = {1, 1, 1};
  UpdateResult r = UpdateLearner({&table, &critic}, state, s, h, false);
  EXPECT_TRUE(r.theta_hat[0].value() == state.policy.values()[0]);
  EXPECT_EQ(r.critic_loss, 0.0);
}

TEST(ActorCriticTest, GammaZeroTargetIsImmediateReward) {
  // Tabular critic on one-hot input: one SGD step moves V by
  // lr * (target - V) where target = r when gamma = 0.
  LinearModel table(2, 2);
  LinearModel critic(2, 1);
  AgentHyper h;
  h.kind = AgentKind::kActorCritic;
  h.gamma = 0.0;
  h.critic_lr = 0.25;
  LearnerState state = MakeLearner("a", {&table, &critic}, h);
  state.target = {Matrix::Constant(2, 1, 100.0)};  // must not matter
  // Row 0 is non-terminal, so the bootstrap would matter if gamma > 0.
  AgentTrajectorySlice s;
  s.obs = Matrix::Identity(2, 2);
  s.next_obs = Matrix::Identity(2, 2).bottomRows(1).replicate(2, 1);
  s.actions = {1, 0};
  s.env_rewards = Eigen::Vector2d(3.0, 0.0);
  s.dones = {0, 1};
  UpdateResult r = UpdateLearner({&table, &critic}, state, s, h, false);
  EXPECT_NEAR(r.critic_hat[0](0, 0), 0.25 * 3.0, 1e-15);
  EXPECT_EQ(r.critic_hat[0](1, 0), 0.0);
}

TEST(ActorCriticTest, TargetRateOneCopiesMainNetwork) {
  Fixture f;
  Rng rng(8);
  AgentTrajectorySlice s = RandomSlice(rng, 3, 3);
  for (AgentKind kind : {AgentKind::kActorCritic, AgentKind::kPpo,
                         AgentKind::kQSoftmax}) {
    AgentHyper h = HyperFor(kind);
    h.target_rate = 1.0;
    LearnerState state = MakeLearner("a", f.Models(kind), h);
    UpdateResult r = UpdateLearner(f.Models(kind), state, s, h, false);
    const std::vector<Matrix> main = kind == AgentKind::kQSoftmax
                                         ? dg::Values(r.theta_hat)
                                         : r.critic_hat;
    ASSERT_EQ(main.size(), r.target_hat.size());
    for (size_t i = 0; i < main.size(); ++i) {
      EXPECT_TRUE(main[i] == r.target_hat[i]) << AgentKindName(kind);
    }
  }
}

TEST(PpoTest, FirstStepEqualsAdvantageWeightedPolicyGradient) {
  Fixture f;
  Rng rng(9);
  AgentTrajectorySlice s = RandomSlice(rng, 3, 3);
  AgentHyper h = HyperFor(AgentKind::kPpo);
  h.entropy_coef = 0.0;
  LearnerState state = MakeLearner("a", f.Models(h.kind), h);
  state.critic = f.critic.InitParams();
  state.target = state.critic;
  UpdateResult ppo = UpdateLearner(f.Models(h.kind), state, s, h, false);

  // Vanilla: theta + lr * grad (1/K) sum_t log pi(a_t|o_t) A_t.
  const Eigen::VectorXd v = CriticValues(f.critic, state.critic, s.obs);
  const Eigen::VectorXd vn = CriticValues(f.critic, state.target, s.next_obs);
  Eigen::VectorXd delta(s.size());
  for (Eigen::Index t = 0; t < s.size(); ++t) {
    delta(t) = s.env_rewards(t) + (s.dones[t] ? 0.0 : h.gamma * vn(t)) - v(t);
  }
  const Eigen::VectorXd adv = GaeValue(delta, s.dones, h.gamma, h.gae_lambda);
  dg::Var logp = PolicyLogProbs(f.policy, h, state.policy.vars, s.obs,
                                s.actions, 0.0);
  dg::Var obj = dg::Scale(dg::SumAll(dg::Mul(logp, dg::Constant(Matrix(adv)))),
                          0.5);
  const auto g = dg::Grad(obj, state.policy.vars);
  for (size_t i = 0; i < g.size(); ++i) {
    const Matrix expected = state.policy.vars[i].value() + h.lr * g[i].value();
    EXPECT_LE((ppo.theta_hat[i].value() - expected).cwiseAbs().maxCoeff(),
              1e-13);
  }
}

TEST(PpoTest, InvalidClipThrows) {
  Fixture f;
  Rng rng(10);
  AgentTrajectorySlice s = RandomSlice(rng, 3, 3);
  AgentHyper h = HyperFor(AgentKind::kPpo);
  h.clip_eps = 1.0;
  LearnerState state = MakeLearner("a", f.Models(h.kind), h);
  EXPECT_THROW(UpdateLearner(f.Models(h.kind), state, s, h, false),
               std::invalid_argument);
}

TEST(QSoftmaxTest, UniformQGivesUniformPolicy) {
  AgentHyper h = HyperFor(AgentKind::kQSoftmax);
  LinearModel q(1, 4);
  const Matrix logits =
      PolicyLogitsValue(q, h, std::vector<Matrix>{Matrix::Constant(1, 4, 3.7)},
                        Matrix::Ones(1, 1));
  const Eigen::RowVectorXd p = nets::SoftmaxRow(logits.row(0));
  for (int a = 0; a < 4; ++a) EXPECT_NEAR(p(a), 0.25, 1e-15);
}

TEST(QSoftmaxTest, ArgmaxInvariance) {
  Rng rng(11);
  LinearModel q(1, 5);
  std::uniform_real_distribution<double> temp(0.01, 20.0);
  for (int trial = 0; trial < 100; ++trial) {
    AgentHyper h = HyperFor(AgentKind::kQSoftmax);
    h.q_temperature = temp(rng);
    const Matrix table = Random(rng, 1, 5, 3.0);
    const Matrix logits = PolicyLogitsValue(
        q, h, std::vector<Matrix>{table}, Matrix::Ones(1, 1));
    Eigen::Index qa, pa;
    table.row(0).maxCoeff(&qa);
    nets::SoftmaxRow(logits.row(0)).maxCoeff(&pa);
    EXPECT_EQ(qa, pa);
  }
}

TEST(QSoftmaxTest, PredictionMovesTowardTarget) {
  LinearModel q(1, 2);
  AgentHyper h = HyperFor(AgentKind::kQSoftmax);
  h.lr = 0.01;
  nets::ParamBlock theta =
      nets::ParamBlock::Create("q", dg::ParamRole::kAgentPolicy, q);
  AgentTrajectorySlice s;
  s.obs = Matrix::Ones(1, 1);
  s.next_obs = Matrix::Ones(1, 1);
  s.actions = {1};
  s.env_rewards = Eigen::VectorXd::Ones(1);
  s.dones = {1};
  UpdateResult r = QSoftmaxUpdate(q, theta.vars, theta.values(), s, h, false);
  const double pred = r.theta_hat[0].value()(0, 1);
  EXPECT_GT(pred, 0.0);
  EXPECT_LT(pred, 1.0);
  EXPECT_EQ(r.theta_hat[0].value()(0, 0), 0.0);
}

// grad_eta of sum(W . theta_hat) against central differences over eta.
TEST(LinkageTest, EveryAgentKindMatchesFiniteDifferences) {
  Fixture f;
  for (AgentKind kind : kAllKinds) {
    Rng rng(20);
    AgentTrajectorySlice base = RandomSlice(rng, 3, 3);
    AgentHyper h = HyperFor(kind);
    LearnerState state = MakeLearner("a", f.Models(kind), h);
    const Matrix eta0 = Random(rng, 3, 1);
    std::vector<Matrix> weights;
    for (const auto& p : state.policy.values()) {
      weights.push_back(Random(rng, p.rows(), p.cols()));
    }
    auto scalar_of = [&](const std::vector<dg::Var>& theta_hat) {
      dg::Var acc = dg::Scalar(0.0);
      for (size_t i = 0; i < theta_hat.size(); ++i) {
        acc = dg::Add(acc, dg::SumAll(dg::Mul(theta_hat[i],
                                              dg::Constant(weights[i]))));
      }
      return acc;
    };
    auto run = [&](const dg::Var& eta, bool create_graph) {
      LearnerState copy = state;  // fresh optimizer state every evaluation
      AgentTrajectorySlice s = base;
      s.incentives = Incentives(s.obs, eta);
      return scalar_of(
          UpdateLearner(f.Models(kind), copy, s, h, create_graph).theta_hat);
    };
    dg::Var eta = dg::Leaf("eta", eta0);
    const Matrix analytic = dg::Grad(run(eta, true), {&eta, 1})[0].value();
    const double eps = 1e-5;
    Matrix fd(3, 1);
    for (int i = 0; i < 3; ++i) {
      Matrix plus = eta0, minus = eta0;
      plus(i) += eps;
      minus(i) -= eps;
      fd(i) = (run(dg::Constant(plus), false).scalar() -
               run(dg::Constant(minus), false).scalar()) /
              (2 * eps);
    }
    const double rel = (analytic - fd).norm() /
                       std::max({analytic.norm(), fd.norm(), 1e-12});
    EXPECT_LE(rel, 1e-4) << AgentKindName(kind);
    EXPECT_GT(analytic.norm(), 0.0) << AgentKindName(kind);
  }
}

TEST(NeutralityTest, ZeroIncentiveFunctionIsBitIdentical) {
  Fixture f;
  for (AgentKind kind : kAllKinds) {
    Rng rng(30);
    AgentTrajectorySlice plain = RandomSlice(rng, 3, 3);
    AgentHyper h = HyperFor(kind);
    h.adam = true;
    LearnerState a = MakeLearner("a", f.Models(kind), h);
    LearnerState b = a;
    AgentTrajectorySlice with_designer = plain;
    dg::Var eta = dg::Leaf("eta", Random(rng, 3, 1));
    // A designer whose output is identically zero.
    with_designer.incentives =
        dg::Scale(Incentives(plain.obs, eta), 0.0);
    UpdateResult ra = UpdateLearner(f.Models(kind), a, plain, h, false);
    UpdateResult rb = UpdateLearner(f.Models(kind), b, with_designer, h, true);
    for (size_t i = 0; i < ra.theta_hat.size(); ++i) {
      EXPECT_TRUE(ra.theta_hat[i].value() == rb.theta_hat[i].value())
          << AgentKindName(kind);
    }
    ASSERT_EQ(ra.critic_hat.size(), rb.critic_hat.size());
    for (size_t i = 0; i < ra.critic_hat.size(); ++i) {
      EXPECT_TRUE(ra.critic_hat[i] == rb.critic_hat[i]);
    }
  }
}

TEST(OptimizerTest, FirstAdamStepHasMagnitudeLr) {
  dg::Var p = dg::Leaf("p", Matrix::Zero(1, 3));
  Matrix gv(1, 3);
  gv << 2.0, -0.001, 50.0;
  dg::Var g = dg::Constant(gv);
  AdamState state;
  auto out = ApplyStep({&p, 1}, {&g, 1}, 0.01, 1.0, &state);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(std::abs(out[0].value()(0, i)), 0.01, 1e-6);
  }
  EXPECT_EQ(state.step, 1);
}

TEST(OptimizerTest, AdamStepIsLinearInGradientWithFrozenScale) {
  // d step / d g = lr (1 - beta1) / bias1 / (sqrt(v_hat) + eps), with v_hat
  // taken from the gradient value.
  AdamConfig cfg;
  dg::Var p = dg::Leaf("p", Matrix::Zero(1, 1));
  dg::Var x = dg::Leaf("x", Matrix::Constant(1, 1, 0.7));
  dg::Var g = dg::Scale(x, 3.0);
  AdamState state;
  auto out = ApplyStep({&p, 1}, {&g, 1}, 0.1, 1.0, &state, cfg);
  const double gv = 2.1;
  const double v_hat = gv * gv;
  const double expected = 0.1 * 3.0 * (1 - cfg.beta1) / (1 - cfg.beta1) /
                          (std::sqrt(v_hat) + cfg.eps);
  EXPECT_NEAR(dg::Grad(out[0], {&x, 1})[0].scalar(), expected, 1e-12);
}

TEST(OptimizerTest, ClipByGlobalNorm) {
  Matrix a(1, 2);
  a << 3.0, 4.0;
  dg::Var g = dg::Constant(a);
  auto clipped = ClipByGlobalNorm({&g, 1}, 1.0);
  EXPECT_NEAR(clipped[0].value().norm(), 1.0, 1e-15);
  auto untouched = ClipByGlobalNorm({&g, 1}, 10.0);
  EXPECT_TRUE(untouched[0].value() == a);
}

}  // namespace
}  // namespace mgid::agents
