#include "mgid/harness/er_trainer.h"

#include <stdexcept>

#include "mgid/diffgraph/autodiff.h"
#include "mgid/diffgraph/ops.h"
#include "mgid/envs/escape_room.h"
#include "mgid/nets/policy.h"

namespace mgid::harness {
namespace {

constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kEvalStream = 2;

std::vector<int> Layers(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> l{in};
  l.insert(l.end(), hidden.begin(), hidden.end());
  l.push_back(out);
  return l;
}

std::uint64_t InitSeed(std::uint64_t seed, std::uint64_t salt) {
  Rng r = MakeRng(seed, 100 + salt);
  return r();
}

// Per-episode step buffers before they are stacked episode-major.
struct EpisodeBuffer {
  std::vector<std::vector<Eigen::RowVectorXd>> obs, next_obs;
  std::vector<std::vector<int>> actions;
  std::vector<std::vector<double>> env_rewards, incentives;
  std::vector<Eigen::RowVectorXd> dobs, dnext, dinput, decision;
};

Matrix Stack(const std::vector<Eigen::RowVectorXd>& rows, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (size_t r = 0; r < rows.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = rows[r];
  return m;
}

}  // namespace

Eigen::VectorXd ErBatch::DesignerReward() const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(steps());
  for (const auto& e : env_rewards) r += e;
  return r;
}

Eigen::VectorXd ErBatch::IncentiveTotals() const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(steps());
  for (const auto& e : incentives) r += e;
  return r;
}

double ErBatch::Welfare() const {
  return (DesignerReward() - IncentiveTotals()).sum() / episodes;
}

// Adapter exposing the trainer to the MetaGrad loop.
class ErTrainer::Problem : public designers::MetaGradProblem {
 public:
  explicit Problem(ErTrainer& t) : t_(t) {}

  designers::TrajectoryPtr Generate(std::span<const Matrix>) override {
    auto b = t_.Rollout(t_.config_.episodes_per_iter, t_.train_rng_,
                        t_.ExploreEps(), false);
    t_.episodes_done_ += b->episodes;
    t_.last_train_welfare_ = b->Welfare();
    return b;
  }

  void UpdateAgents(const designers::Trajectory& base,
                    std::span<const dg::Var> eta) override {
    const auto& b = static_cast<const ErBatch&>(base);
    dg::Var head = t_.incentive_->Forward(eta, b.designer_input);
    theta_hat_.clear();
    for (int i = 0; i < t_.config_.er.n; ++i) {
      agents::AgentTrajectorySlice s = t_.Slice(b, i);
      std::vector<dg::Index> idx(b.actions[i].begin(), b.actions[i].end());
      s.incentives = dg::Gather(head, idx);
      agents::UpdateResult up = agents::UpdateLearner(
          {t_.policy_nets_[i].get(), t_.critic_nets_[i].get()}, t_.learners_[i],
          s, t_.config_.agent.hyper, true);
      agents::Commit(t_.learners_[i], up);
      theta_hat_.push_back(std::move(up.theta_hat));
    }
  }

  designers::OuterInputs Outer(const designers::Trajectory& base) override {
    const auto& b = static_cast<const ErBatch&>(base);
    dg::Var joint;
    for (int i = 0; i < t_.config_.er.n; ++i) {
      dg::Var lp = agents::PolicyLogProbs(*t_.policy_nets_[i],
                                          t_.config_.agent.hyper, theta_hat_[i],
                                          b.obs[i], b.actions[i], b.explore_eps);
      joint = joint.defined() ? dg::Add(joint, lp) : lp;
    }
    designers::OuterInputs in;
    in.joint_logp = joint;
    in.advantages = t_.critic_->Advantages(b.designer_obs, b.designer_next_obs,
                                           b.DesignerReward(), b.dones);
    in.normalizer = b.episodes;
    return in;
  }

  dg::Var Cost(const designers::Trajectory& base,
               std::span<const dg::Var> eta) override {
    const auto& b = static_cast<const ErBatch&>(base);
    dg::Var head = t_.incentive_->Forward(eta, b.designer_input);
    dg::Var total;
    for (int i = 0; i < t_.config_.er.n; ++i) {
      std::vector<dg::Index> idx(b.actions[i].begin(), b.actions[i].end());
      dg::Var s = dg::SumAll(dg::Gather(head, idx));
      total = total.defined() ? dg::Add(total, s) : s;
    }
    return dg::Scale(total, 1.0 / b.episodes);
  }

  void TrainCritic(const designers::Trajectory& base) override {
    const auto& b = static_cast<const ErBatch&>(base);
    t_.critic_->Train(b.designer_obs, b.designer_next_obs, b.DesignerReward(),
                      b.dones, b.episodes);
  }

 private:
  ErTrainer& t_;
  std::vector<std::vector<dg::Var>> theta_hat_;
};

ErTrainer::ErTrainer(const RunConfig& config)
    : config_(config),
      train_rng_(MakeRng(config.seed, kTrainStream)),
      eval_rng_(MakeRng(config.seed, kEvalStream)) {
  config_.Validate();
  if (config_.env != EnvKind::kEscapeRoom) {
    throw std::invalid_argument("ErTrainer needs the escape_room environment");
  }
  if (config_.agent.shared) {
    throw std::invalid_argument(
        "Escape Room agents do not share parameters; set agent.shared=false");
  }
  const int n = config_.er.n;
  const int obs = 3 * n;
  const agents::AgentHyper& h = config_.agent.hyper;
  for (int i = 0; i < n; ++i) {
    policy_nets_.push_back(std::make_unique<nets::Mlp>(nets::MlpSpec{
        .layer_sizes = Layers(obs, config_.agent.hidden, envs::kErActions),
        .head = h.kind == agents::AgentKind::kQSoftmax ? nets::HeadKind::kLinear
                                                       : nets::HeadKind::kSoftmax,
        .init_seed = InitSeed(config_.seed, i)}));
    critic_nets_.push_back(std::make_unique<nets::Mlp>(nets::MlpSpec{
        .layer_sizes = Layers(obs, config_.agent.critic_hidden, 1),
        .head = nets::HeadKind::kLinear,
        .init_seed = InitSeed(config_.seed, 50 + i)}));
    learners_.push_back(agents::MakeLearner(
        "agent" + std::to_string(i),
        {policy_nets_[i].get(), critic_nets_[i].get()}, h));
  }

  const DesignerConfig& d = config_.designer;
  const nets::MlpSpec critic_spec{
      .layer_sizes = Layers(obs, d.critic_hidden, 1),
      .head = nets::HeadKind::kLinear,
      .init_seed = InitSeed(config_.seed, 900)};
  designers::DualRlConfig dual{.lr = d.lr, .entropy_coef = d.entropy_coef,
                               .critic = d.critic};
  switch (d.kind) {
    case DesignerKind::kMetaGrad: {
      incentive_ = std::make_unique<designers::IncentiveFunction>(nets::MlpSpec{
          .layer_sizes = Layers(2 * obs, d.hidden, envs::kErActions),
          .head = nets::HeadKind::kScaledSigmoid,
          .lo = 0.0,
          .hi = 2.0,
          .init_seed = InitSeed(config_.seed, 901)});
      critic_ = std::make_unique<designers::ValueFunction>(critic_spec, d.critic);
      metagrad_ = std::make_unique<designers::MetaGrad>(
          incentive_->CreateParams(),
          designers::MetaGradConfig{.lr = d.lr,
                                    .cost_lr = d.cost_lr,
                                    .cost_weight = d.cost_weight,
                                    .clip_eps = d.clip_eps});
      problem_ = std::make_unique<Problem>(*this);
      break;
    }
    case DesignerKind::kDualRlDiscrete:
      codec_ = std::make_unique<designers::DiscreteIncentiveCodec>(
          d.incentive_values, envs::kErActions, d.action_cap);
      discrete_ = std::make_unique<designers::CategoricalDesigner>(
          nets::MlpSpec{.layer_sizes = Layers(obs, d.hidden,
                                              static_cast<int>(codec_->size())),
                        .init_seed = InitSeed(config_.seed, 902)},
          1, critic_spec, dual);
      break;
    case DesignerKind::kDualRlContinuous:
      continuous_ = std::make_unique<designers::GaussianDesigner>(
          nets::MlpSpec{.layer_sizes = Layers(2 * obs, d.hidden, n),
                        .head = nets::HeadKind::kLinear,
                        .init_seed = InitSeed(config_.seed, 903)},
          0.0, 2.0, critic_spec, dual);
      break;
    case DesignerKind::kNone:
    case DesignerKind::kFreeMarket:
      break;
    default:
      throw std::invalid_argument("designer kind not available in Escape Room");
  }
}

ErTrainer::~ErTrainer() = default;

double ErTrainer::ExploreEps() const {
  const AgentConfig& a = config_.agent;
  return nets::LinearDecay{a.explore_start, a.explore_end, a.explore_episodes}
      .At(static_cast<double>(episodes_done_));
}

Eigen::RowVectorXd ErTrainer::IncentiveHead(const Eigen::RowVectorXd& input) const {
  if (!incentive_) throw std::logic_error("no incentive function");
  return incentive_->Value(metagrad_->eta().values(), input).row(0);
}

std::vector<double> ErTrainer::DesignerIncentives(
    const Eigen::RowVectorXd& dobs, const Eigen::RowVectorXd& input,
    std::span<const int> actions, Rng& rng, bool greedy,
    Eigen::RowVectorXd* decision) const {
  const int n = config_.er.n;
  std::vector<double> out(n, 0.0);
  if (metagrad_) {
    const Eigen::RowVectorXd head = IncentiveHead(input);
    for (int i = 0; i < n; ++i) out[i] = head(actions[i]);
  } else if (discrete_) {
    long index;
    if (greedy) {
      Eigen::Index best;
      discrete_->Probabilities(dobs).row(0).maxCoeff(&best);
      index = best;
    } else {
      index = discrete_->Act(dobs, rng)[0];
    }
    const std::vector<double> values = codec_->Decode(index);
    for (int i = 0; i < n; ++i) out[i] = values[actions[i]];
    *decision = Eigen::RowVectorXd::Constant(1, static_cast<double>(index));
  } else if (continuous_) {
    const Eigen::RowVectorXd u =
        greedy ? continuous_->Mean(input) : continuous_->Sample(input, rng);
    const Eigen::RowVectorXd v = continuous_->Squash(u);
    for (int i = 0; i < n; ++i) out[i] = v(i);
    *decision = u;
  }
  return out;
}

std::shared_ptr<ErBatch> ErTrainer::Rollout(int episodes, Rng& rng,
                                            double explore_eps,
                                            bool greedy_designer) const {
  const int n = config_.er.n;
  const int obs_dim = 3 * n;
  const agents::AgentHyper& h = config_.agent.hyper;
  std::vector<std::vector<Matrix>> params(n);
  for (int i = 0; i < n; ++i) params[i] = learners_[i].policy.values();

  std::vector<envs::EscapeRoom> envs(episodes, envs::EscapeRoom(config_.er));
  std::vector<EpisodeBuffer> buf(episodes);
  for (auto& b : buf) {
    b.obs.assign(n, {});
    b.next_obs.assign(n, {});
    b.actions.assign(n, {});
    b.env_rewards.assign(n, {});
    b.incentives.assign(n, {});
  }
  std::vector<int> active(episodes);
  for (int e = 0; e < episodes; ++e) active[e] = e;

  while (!active.empty()) {
    const Eigen::Index rows = static_cast<Eigen::Index>(active.size());
    // Every agent acts in every active episode.
    std::vector<std::vector<int>> joint(active.size(), std::vector<int>(n));
    std::vector<std::vector<Eigen::RowVectorXd>> agent_obs(n);
    for (int i = 0; i < n; ++i) {
      Matrix o(rows, obs_dim);
      for (Eigen::Index r = 0; r < rows; ++r) {
        o.row(r) = envs[active[r]].AgentObservation(i);
        agent_obs[i].push_back(o.row(r));
      }
      const Matrix logits = agents::PolicyLogitsValue(*policy_nets_[i], h,
                                                      params[i], o);
      for (Eigen::Index r = 0; r < rows; ++r) {
        joint[r][i] = nets::SampleAction(nets::SoftmaxRow(logits.row(r)), rng,
                                         explore_eps);
      }
    }
    std::vector<int> still;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const int e = active[r];
      EpisodeBuffer& b = buf[e];
      const Eigen::RowVectorXd dobs = envs[e].DesignerObservation();
      Eigen::RowVectorXd input(2 * obs_dim);
      input << dobs, envs::JointActionOneHot(joint[r]);
      Eigen::RowVectorXd decision;
      const std::vector<double> inc =
          DesignerIncentives(dobs, input, joint[r], rng, greedy_designer, &decision);
      const envs::ErStepResult step = envs[e].Step(joint[r]);
      for (int i = 0; i < n; ++i) {
        b.obs[i].push_back(agent_obs[i][r]);
        b.next_obs[i].push_back(envs[e].AgentObservation(i));
        b.actions[i].push_back(joint[r][i]);
        b.env_rewards[i].push_back(step.rewards[i]);
        b.incentives[i].push_back(inc[i]);
      }
      b.dobs.push_back(dobs);
      b.dnext.push_back(envs[e].DesignerObservation());
      b.dinput.push_back(input);
      if (decision.size() > 0) b.decision.push_back(decision);
      if (!step.done) still.push_back(e);
    }
    active = std::move(still);
  }

  // Stack episode-major.
  auto batch = std::make_shared<ErBatch>();
  batch->episodes = episodes;
  batch->explore_eps = explore_eps;
  batch->obs.resize(n);
  batch->next_obs.resize(n);
  batch->actions.resize(n);
  batch->env_rewards.resize(n);
  batch->incentives.resize(n);
  std::vector<Eigen::RowVectorXd> dobs, dnext, dinput, decision;
  std::vector<std::vector<Eigen::RowVectorXd>> obs(n), next_obs(n);
  std::vector<std::vector<double>> env_r(n), inc(n);
  for (const EpisodeBuffer& b : buf) {
    const size_t len = b.dobs.size();
    for (int i = 0; i < n; ++i) {
      obs[i].insert(obs[i].end(), b.obs[i].begin(), b.obs[i].end());
      next_obs[i].insert(next_obs[i].end(), b.next_obs[i].begin(), b.next_obs[i].end());
      batch->actions[i].insert(batch->actions[i].end(), b.actions[i].begin(),
                               b.actions[i].end());
      env_r[i].insert(env_r[i].end(), b.env_rewards[i].begin(), b.env_rewards[i].end());
      inc[i].insert(inc[i].end(), b.incentives[i].begin(), b.incentives[i].end());
    }
    dobs.insert(dobs.end(), b.dobs.begin(), b.dobs.end());
    dnext.insert(dnext.end(), b.dnext.begin(), b.dnext.end());
    dinput.insert(dinput.end(), b.dinput.begin(), b.dinput.end());
    decision.insert(decision.end(), b.decision.begin(), b.decision.end());
    for (size_t k = 0; k < len; ++k) batch->dones.push_back(k + 1 == len);
  }
  for (int i = 0; i < n; ++i) {
    batch->obs[i] = Stack(obs[i], obs_dim);
    batch->next_obs[i] = Stack(next_obs[i], obs_dim);
    batch->env_rewards[i] = Eigen::Map<Eigen::VectorXd>(env_r[i].data(), env_r[i].size());
    batch->incentives[i] = Eigen::Map<Eigen::VectorXd>(inc[i].data(), inc[i].size());
  }
  batch->designer_obs = Stack(dobs, obs_dim);
  batch->designer_next_obs = Stack(dnext, obs_dim);
  batch->designer_input = Stack(dinput, 2 * obs_dim);
  if (!decision.empty()) batch->designer_actions = Stack(decision, decision[0].size());
  return batch;
}

agents::AgentTrajectorySlice ErTrainer::Slice(const ErBatch& b, int i) const {
  agents::AgentTrajectorySlice s;
  s.obs = b.obs[i];
  s.next_obs = b.next_obs[i];
  s.actions = b.actions[i];
  s.env_rewards = b.env_rewards[i];
  s.dones = b.dones;
  s.explore_eps = b.explore_eps;
  return s;
}

void ErTrainer::Iterate() {
  if (metagrad_) {
    IterateMetaGrad();
  } else if (discrete_ || continuous_) {
    IterateDualRl();
  } else {
    IterateNone();
  }
}

void ErTrainer::IterateMetaGrad() {
  if (!metagrad_->started()) metagrad_->Start(*problem_);
  metagrad_->Iterate(*problem_);
}

void ErTrainer::IterateNone() {
  auto b = Rollout(config_.episodes_per_iter, train_rng_, ExploreEps(), false);
  episodes_done_ += b->episodes;
  last_train_welfare_ = b->Welfare();
  for (int i = 0; i < config_.er.n; ++i) {
    auto up = agents::UpdateLearner({policy_nets_[i].get(), critic_nets_[i].get()},
                                    learners_[i], Slice(*b, i),
                                    config_.agent.hyper, false);
    agents::Commit(learners_[i], up);
  }
}

void ErTrainer::IterateDualRl() {
  auto b = Rollout(config_.episodes_per_iter, train_rng_, ExploreEps(), false);
  episodes_done_ += b->episodes;
  last_train_welfare_ = b->Welfare();
  for (int i = 0; i < config_.er.n; ++i) {
    agents::AgentTrajectorySlice s = Slice(*b, i);
    s.incentives = dg::Constant(Matrix(b->incentives[i]));
    auto up = agents::UpdateLearner({policy_nets_[i].get(), critic_nets_[i].get()},
                                    learners_[i], s, config_.agent.hyper, false);
    agents::Commit(learners_[i], up);
  }
  designers::DesignerBatch db;
  db.obs = discrete_ ? b->designer_obs : b->designer_input;
  db.next_obs = b->designer_next_obs;
  db.actions = b->designer_actions;
  db.rewards = b->DesignerReward() - b->IncentiveTotals();
  db.dones = b->dones;
  db.episodes = b->episodes;
  if (discrete_) {
    discrete_->Learn(db);
  } else {
    continuous_->Learn(db, b->designer_obs, b->designer_next_obs);
  }
}

void ErTrainer::TrainEpisodes(long episodes) {
  const long target = episodes_done_ + episodes;
  while (episodes_done_ < target) Iterate();
}

MetricsRecord ErTrainer::Evaluate(int episodes) {
  auto b = Rollout(episodes, eval_rng_, 0.0, false);
  MetricsRecord r;
  r.episode = episodes_done_;
  r.train_welfare = last_train_welfare_;
  r.test_welfare = b->Welfare();
  r.psi = b->IncentiveTotals().sum() / episodes;
  for (int i = 0; i < config_.er.n; ++i) {
    r.agent_returns.push_back((b->env_rewards[i] + b->incentives[i]).sum() / episodes);
  }
  return r;
}

nlohmann::json ErTrainer::Replay(std::uint64_t seed) const {
  Rng rng = MakeRng(seed, 21);
  auto b = Rollout(1, rng, 0.0, false);
  nlohmann::json steps = nlohmann::json::array();
  for (Eigen::Index t = 0; t < b->steps(); ++t) {
    nlohmann::json s;
    s["t"] = t;
    for (int i = 0; i < config_.er.n; ++i) {
      s["actions"].push_back(b->actions[i][t]);
      s["env_rewards"].push_back(b->env_rewards[i](t));
      s["incentives"].push_back(b->incentives[i](t));
    }
    steps.push_back(std::move(s));
  }
  return {{"env", "escape_room"}, {"seed", seed}, {"welfare", b->Welfare()},
          {"steps", steps}};
}

nets::Checkpoint ErTrainer::Save() const {
  nets::Checkpoint ckpt;
  for (const auto& l : learners_) nets::AddBlock(ckpt, l.policy);
  if (metagrad_) nets::AddBlock(ckpt, metagrad_->eta());
  if (discrete_) nets::AddBlock(ckpt, discrete_->params());
  if (continuous_) nets::AddBlock(ckpt, continuous_->params());
  return ckpt;
}

void ErTrainer::Load(const nets::Checkpoint& ckpt) {
  for (auto& l : learners_) nets::RestoreBlock(ckpt, l.policy);
  if (metagrad_) nets::RestoreBlock(ckpt, metagrad_->mutable_eta());
  if (discrete_) nets::RestoreBlock(ckpt, discrete_->params());
  if (continuous_) nets::RestoreBlock(ckpt, continuous_->params());
}

}  // namespace mgid::harness
