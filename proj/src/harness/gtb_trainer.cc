#include "mgid/harness/gtb_trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mgid/designers/static_schedule.h"
#include "mgid/diffgraph/autodiff.h"
#include "mgid/diffgraph/ops.h"
#include "mgid/envs/gtb.h"
#include "mgid/nets/policy.h"

namespace mgid::harness {
namespace {

constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kEvalStream = 2;
// c^-eta is unbounded at zero coin.
constexpr double kUtilityFloor = envs::kCoinQuantum;

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

Matrix Stack(const std::vector<Eigen::RowVectorXd>& rows, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (size_t r = 0; r < rows.size(); ++r) {
    m.row(static_cast<Eigen::Index>(r)) = rows[r];
  }
  return m;
}

Matrix PickRows(const Matrix& m, std::span<const Eigen::Index> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = m.row(rows[k]);
  }
  return out;
}

double MarginalUtility(double coin, double eta) {
  return std::pow(std::max(coin, kUtilityFloor), -eta);
}

}  // namespace

double AnnealCap(const AnnealConfig& anneal, double episode) {
  if (!anneal.enabled) return 1.0;
  return std::min(1.0, 0.1 + 0.9 * std::max(episode, 0.0) / anneal.episodes);
}

std::vector<Eigen::Index> GtbBatch::AgentRows(int agent) const {
  std::vector<Eigen::Index> rows;
  for (int e = 0; e < episodes; ++e) {
    const Eigen::Index base =
        (static_cast<Eigen::Index>(e) * agents + agent) * horizon;
    for (int t = 0; t < horizon; ++t) rows.push_back(base + t);
  }
  return rows;
}

double GtbBatch::MeanSwf() const {
  double s = 0.0;
  for (const auto& st : stats) s += st.swf;
  return stats.empty() ? 0.0 : s / static_cast<double>(stats.size());
}

class GtbTrainer::Problem : public designers::MetaGradProblem {
 public:
  explicit Problem(GtbTrainer& t) : t_(t) {}

  designers::TrajectoryPtr Generate(std::span<const Matrix>) override {
    auto b = t_.Rollout(t_.config_.episodes_per_iter, t_.train_rng_,
                        t_.ExploreEps(), true);
    t_.episodes_done_ += b->episodes;
    t_.last_train_welfare_ = b->MeanSwf();
    return b;
  }

  void UpdateAgents(const designers::Trajectory& base,
                    std::span<const dg::Var> eta) override {
    const auto& b = static_cast<const GtbBatch&>(base);
    const dg::Var inc = t_.TaxIncentives(b, t_.RatesVar(b, eta));
    theta_hat_.clear();
    for (size_t k = 0; k < t_.learners_.size(); ++k) {
      agents::AgentTrajectorySlice s = t_.Slice(b, k);
      std::vector<dg::Var> parts;
      for (int i : t_.members_[k]) {
        for (int e = 0; e < b.episodes; ++e) {
          parts.push_back(dg::SliceRows(
              inc, (static_cast<Eigen::Index>(e) * b.agents + i) * b.horizon,
              b.horizon));
        }
      }
      s.incentives = dg::ConcatRows(parts);
      agents::UpdateResult up = agents::UpdateLearner(
          {t_.policy_nets_[k].get(), t_.critic_nets_[k].get()},
          t_.learners_[k], s, t_.config_.agent.hyper, true);
      agents::Commit(t_.learners_[k], up);
      theta_hat_.push_back(std::move(up.theta_hat));
    }
  }

  designers::OuterInputs Outer(const designers::Trajectory& base) override {
    const auto& b = static_cast<const GtbBatch&>(base);
    // Per-agent log-probs, then summed per (episode, step).
    std::vector<dg::Var> agent_logp(b.agents);
    for (size_t k = 0; k < t_.learners_.size(); ++k) {
      for (int i : t_.members_[k]) {
        const std::vector<Eigen::Index> rows = b.AgentRows(i);
        std::vector<int> acts;
        for (Eigen::Index r : rows) acts.push_back(b.actions[r]);
        agent_logp[i] = agents::PolicyLogProbs(
            *t_.policy_nets_[k], t_.config_.agent.hyper, theta_hat_[k],
            PickRows(b.obs, rows), acts, b.explore_eps);
      }
    }
    dg::Var joint = agent_logp[0];
    for (int i = 1; i < b.agents; ++i) joint = dg::Add(joint, agent_logp[i]);
    designers::OuterInputs in;
    in.joint_logp = joint;
    in.advantages = t_.critic_->Advantages(
        b.designer_obs, b.designer_next_obs,
        b.designer_reward * t_.config_.designer.reward_scale, b.designer_dones);
    in.normalizer = b.episodes;
    return in;
  }

  // Taxes are transfers, not incentive payments: no cost term.
  dg::Var Cost(const designers::Trajectory&, std::span<const dg::Var>) override {
    return dg::Constant(Matrix::Zero(1, 1));
  }

  void TrainCritic(const designers::Trajectory& base) override {
    const auto& b = static_cast<const GtbBatch&>(base);
    t_.critic_->Train(b.designer_obs, b.designer_next_obs,
                      b.designer_reward * t_.config_.designer.reward_scale,
                      b.designer_dones, b.episodes);
  }

 private:
  GtbTrainer& t_;
  std::vector<std::vector<dg::Var>> theta_hat_;
};

GtbTrainer::GtbTrainer(const RunConfig& config)
    : config_(config),
      train_rng_(MakeRng(config.seed, kTrainStream)),
      eval_rng_(MakeRng(config.seed, kEvalStream)) {
  config_.Validate();
  if (config_.env != EnvKind::kGtb) {
    throw std::invalid_argument("GtbTrainer needs the gtb environment");
  }
  const envs::GtbEnv probe(config_.gtb, 0);
  obs_dim_ = probe.agent_obs_size();
  designer_dim_ = probe.designer_obs_size();
  const int n = config_.gtb.agents;
  const agents::AgentHyper& h = config_.agent.hyper;
  const int learners = config_.agent.shared ? 1 : n;
  for (int k = 0; k < learners; ++k) {
    policy_nets_.push_back(std::make_unique<nets::Mlp>(nets::MlpSpec{
        .layer_sizes = Layers(obs_dim_, config_.agent.hidden, envs::kGtbActions),
        .head = h.kind == agents::AgentKind::kQSoftmax ? nets::HeadKind::kLinear
                                                       : nets::HeadKind::kSoftmax,
        .init_seed = InitSeed(config_.seed, k)}));
    critic_nets_.push_back(std::make_unique<nets::Mlp>(nets::MlpSpec{
        .layer_sizes = Layers(obs_dim_, config_.agent.critic_hidden, 1),
        .head = nets::HeadKind::kLinear,
        .init_seed = InitSeed(config_.seed, 50 + k)}));
    const std::string prefix =
        config_.agent.shared ? std::string("agents") : "agent" + std::to_string(k);
    learners_.push_back(agents::MakeLearner(
        prefix, {policy_nets_[k].get(), critic_nets_[k].get()}, h));
    // The 44 trade actions start with the combined weight of one ordinary
    // action; otherwise random play almost never gathers or builds.
    std::vector<Matrix> p = learners_.back().policy.values();
    p.back().rightCols(envs::kTradeActions).array() -=
        std::log(static_cast<double>(envs::kTradeActions)) /
        (h.kind == agents::AgentKind::kQSoftmax ? h.q_temperature : 1.0);
    learners_.back().policy.Assign(p);
    if (config_.agent.shared) {
      members_.emplace_back(n);
      std::iota(members_.back().begin(), members_.back().end(), 0);
    } else {
      members_.push_back({k});
    }
  }

  const DesignerConfig& d = config_.designer;
  const nets::MlpSpec critic_spec{
      .layer_sizes = Layers(designer_dim_, d.critic_hidden, 1),
      .head = nets::HeadKind::kLinear,
      .init_seed = InitSeed(config_.seed, 900)};
  switch (d.kind) {
    case DesignerKind::kMetaGrad:
      incentive_ = std::make_unique<designers::IncentiveFunction>(nets::MlpSpec{
          .layer_sizes = Layers(designer_dim_, d.hidden, envs::kGtbBrackets),
          .head = nets::HeadKind::kScaledSigmoid,
          .lo = 0.0,
          .hi = 1.0,
          .init_seed = InitSeed(config_.seed, 901)});
      critic_ = std::make_unique<designers::ValueFunction>(critic_spec, d.critic);
      metagrad_ = std::make_unique<designers::MetaGrad>(
          incentive_->CreateParams(),
          designers::MetaGradConfig{.lr = d.lr,
                                    .cost_lr = 0.0,
                                    .cost_weight = 0.0,
                                    .clip_eps = d.clip_eps});
      problem_ = std::make_unique<Problem>(*this);
      break;
    case DesignerKind::kDualRlDiscrete:
      dual_ = std::make_unique<designers::CategoricalDesigner>(
          nets::MlpSpec{.layer_sizes = Layers(designer_dim_, d.hidden,
                                              envs::kGtbBrackets * d.rate_levels),
                        .init_seed = InitSeed(config_.seed, 902)},
          envs::kGtbBrackets, critic_spec,
          designers::DualRlConfig{.lr = d.lr,
                                  .entropy_coef = d.entropy_coef,
                                  .critic = d.critic});
      break;
    case DesignerKind::kStatic:
      static_rates_ = designers::StaticSchedule(d.static_rates).Rates();
      break;
    case DesignerKind::kFreeMarket:
      static_rates_ = designers::FreeMarketSchedule().Rates();
      break;
    case DesignerKind::kNone:
      break;
    default:
      throw std::invalid_argument("designer kind not available in GTB");
  }

  if (config_.curriculum.enabled) {
    phase2_start_ = config_.curriculum.phase1_episodes;
    if (!config_.curriculum.phase1_checkpoint.empty()) {
      // Phase 1 was trained elsewhere: start Phase 2 from its agents.
      nets::Checkpoint ckpt = nets::LoadCheckpoint(config_.curriculum.phase1_checkpoint);
      RestoreAgents(ckpt);
      phase1_ = std::move(ckpt);
      phase2_start_ = 0;
    }
  }
}

GtbTrainer::~GtbTrainer() = default;

bool GtbTrainer::in_phase1() const {
  return config_.curriculum.enabled && episodes_done_ < phase2_start_;
}

double GtbTrainer::CurrentCap() const {
  return AnnealCap(config_.anneal,
                   static_cast<double>(episodes_done_ - phase2_start_));
}

double GtbTrainer::ExploreEps() const {
  const AgentConfig& a = config_.agent;
  return nets::LinearDecay{a.explore_start, a.explore_end, a.explore_episodes}
      .At(static_cast<double>(episodes_done_));
}

std::vector<double> GtbTrainer::EmitRates(const Eigen::RowVectorXd& dobs,
                                          double cap, Rng& rng,
                                          Eigen::RowVectorXd* decision) const {
  std::vector<double> rates(envs::kGtbBrackets, 0.0);
  if (metagrad_) {
    const Eigen::RowVectorXd v =
        incentive_->Value(metagrad_->eta().values(), dobs).row(0);
    for (int b = 0; b < envs::kGtbBrackets; ++b) rates[b] = cap * v(b);
  } else if (dual_) {
    const std::vector<int> levels = dual_->Act(dobs, rng);
    decision->resize(envs::kGtbBrackets);
    const double top = config_.designer.rate_levels - 1;
    for (int b = 0; b < envs::kGtbBrackets; ++b) {
      (*decision)(b) = levels[b];
      rates[b] = std::min(cap, levels[b] / top);
    }
  } else {
    rates = static_rates_;
  }
  return rates;
}

std::shared_ptr<GtbBatch> GtbTrainer::Rollout(int episodes, Rng& rng,
                                              double explore_eps,
                                              bool designer_active) const {
  const envs::GtbConfig& gc = config_.gtb;
  const int n = gc.agents, H = gc.horizon, P = gc.periods(), L = gc.period_length;
  const agents::AgentHyper& h = config_.agent.hyper;
  const bool sets_rates = config_.designer.kind != DesignerKind::kNone;
  const double cap = CurrentCap();

  auto b = std::make_shared<GtbBatch>();
  b->episodes = episodes;
  b->agents = n;
  b->horizon = H;
  b->periods = P;
  b->period_length = L;
  b->cap = cap;
  b->explore_eps = explore_eps;

  std::vector<envs::GtbEnv> envs;
  for (int e = 0; e < episodes; ++e) {
    b->env_seeds.push_back(rng());
    envs.emplace_back(gc, b->env_seeds.back());
  }
  std::vector<std::vector<double>> rate_sum(episodes,
                                            std::vector<double>(envs::kGtbBrackets));
  std::vector<std::vector<double>> swf(episodes, std::vector<double>{0.0});

  // Buffers indexed [e][i][t] or [e][t].
  const size_t agent_rows = static_cast<size_t>(episodes) * n * H;
  std::vector<Eigen::RowVectorXd> obs(agent_rows), next_obs(agent_rows);
  b->actions.assign(agent_rows, 0);
  b->rewards.resize(static_cast<Eigen::Index>(agent_rows));
  b->agent_dones.assign(agent_rows, 0);
  std::vector<Eigen::RowVectorXd> dobs(episodes * H), dnext(episodes * H);
  b->designer_reward.resize(episodes * H);
  b->designer_dones.assign(episodes * H, 0);
  std::vector<Eigen::RowVectorXd> pobs(episodes * P), pnext(episodes * P),
      prates(episodes * P), pdec;
  b->period_reward = Eigen::VectorXd::Zero(episodes * P);
  b->period_dones.assign(episodes * P, 0);
  b->mass.assign(static_cast<size_t>(episodes) * n,
                 Matrix::Zero(P, envs::kGtbBrackets));
  b->marginal_utility.assign(episodes, Matrix::Zero(H, n));
  b->marginal_utility_prev.assign(episodes, Matrix::Zero(H, n));

  std::vector<std::vector<Matrix>> params(learners_.size());
  for (size_t k = 0; k < learners_.size(); ++k) params[k] = learners_[k].policy.values();
  std::vector<int> learner_of(n, 0);
  for (size_t k = 0; k < members_.size(); ++k) {
    for (int i : members_[k]) learner_of[i] = static_cast<int>(k);
  }
  auto arow = [&](int e, int i, int t) {
    return (static_cast<size_t>(e) * n + i) * H + t;
  };

  for (int t = 0; t < H; ++t) {
    const int p = t / L;
    if (t % L == 0) {
      for (int e = 0; e < episodes; ++e) {
        const Eigen::RowVectorXd d = envs[e].DesignerObservation();
        const size_t pr = static_cast<size_t>(e) * P + p;
        pobs[pr] = d;
        if (p > 0) pnext[pr - 1] = d;
        std::vector<double> rates(envs::kGtbBrackets, 0.0);
        Eigen::RowVectorXd decision;
        if (sets_rates) {
          rates = designer_active ? EmitRates(d, cap, rng, &decision)
                                  : std::vector<double>(envs::kGtbBrackets, 0.0);
          envs[e].SetRates(rates);
        }
        if (decision.size() > 0) pdec.push_back(decision);
        prates[pr] = Eigen::Map<const Eigen::RowVectorXd>(
            rates.data(), static_cast<Eigen::Index>(rates.size()));
        for (int k = 0; k < envs::kGtbBrackets; ++k) rate_sum[e][k] += rates[k];
      }
    }
    // Agent actions, batched per learner.
    std::vector<std::vector<int>> joint(episodes, std::vector<int>(n));
    for (size_t k = 0; k < learners_.size(); ++k) {
      const auto& mem = members_[k];
      Matrix o(static_cast<Eigen::Index>(episodes * mem.size()), obs_dim_);
      Eigen::Index r = 0;
      for (int e = 0; e < episodes; ++e) {
        for (int i : mem) {
          o.row(r++) = envs[e].AgentObservation(i);
          obs[arow(e, i, t)] = o.row(r - 1);
        }
      }
      const Matrix logits =
          agents::PolicyLogitsValue(*policy_nets_[k], h, params[k], o);
      r = 0;
      for (int e = 0; e < episodes; ++e) {
        for (int i : mem) {
          joint[e][i] = nets::SampleAction(nets::SoftmaxRow(logits.row(r++)), rng,
                                           explore_eps);
        }
      }
    }
    for (int e = 0; e < episodes; ++e) {
      envs::GtbEnv& env = envs[e];
      const size_t dr = static_cast<size_t>(e) * H + t;
      dobs[dr] = env.DesignerObservation();
      const std::vector<double> coin_before = env.Coins();
      const envs::GtbStepResult res = env.Step(joint[e]);
      dnext[dr] = env.DesignerObservation();
      b->designer_reward(static_cast<Eigen::Index>(dr)) = res.designer_reward;
      b->designer_dones[dr] = res.done;
      b->period_reward(e * P + p) += res.designer_reward;
      const std::vector<double> coins = env.Coins();
      for (int i = 0; i < n; ++i) {
        const size_t r = arow(e, i, t);
        b->actions[r] = joint[e][i];
        b->rewards(static_cast<Eigen::Index>(r)) = res.rewards[i];
        b->agent_dones[r] = res.done;
        next_obs[r] = env.AgentObservation(i);
        b->marginal_utility[e](t, i) = MarginalUtility(coins[i], gc.eta_crra);
        b->marginal_utility_prev[e](t, i) =
            MarginalUtility(coin_before[i], gc.eta_crra);
      }
      if (res.period_end) {
        const envs::PeriodRecord& rec = env.periods().back();
        envs::TaxSchedule s = env.schedule();
        s.rates = rec.rates;
        for (int i = 0; i < n; ++i) {
          // Capped taxes do not move with the rates.
          if (rec.taxes[i] != envs::QuantizeCoin(envs::TaxTotal(s, rec.incomes[i]))) {
            continue;
          }
          const std::vector<double> m = envs::BracketMass(s, rec.incomes[i]);
          for (int k = 0; k < envs::kGtbBrackets; ++k) {
            b->mass[static_cast<size_t>(e) * n + i](p, k) = m[k];
          }
        }
      }
      if (res.done) {
        b->period_dones[e * P + P - 1] = 1;
        pnext[e * P + P - 1] = env.DesignerObservation();
      }
    }
  }

  b->obs = Stack(obs, obs_dim_);
  b->next_obs = Stack(next_obs, obs_dim_);
  b->designer_obs = Stack(dobs, designer_dim_);
  b->designer_next_obs = Stack(dnext, designer_dim_);
  b->period_obs = Stack(pobs, designer_dim_);
  b->period_next_obs = Stack(pnext, designer_dim_);
  b->rates = Stack(prates, envs::kGtbBrackets);
  if (!pdec.empty()) b->decisions = Stack(pdec, envs::kGtbBrackets);

  // Per-skill summaries: agents sorted by build skill, lowest first.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
    return gc.BuildSkill(a) < gc.BuildSkill(c);
  });
  for (int e = 0; e < episodes; ++e) {
    const envs::GtbEnv& env = envs[e];
    GtbEpisodeStats st;
    st.swf = env.swf();
    const std::vector<double> coins = env.Coins();
    st.prod = std::accumulate(coins.begin(), coins.end(), 0.0);
    st.eq = envs::EqualityIndex(coins);
    for (int i : order) {
      const envs::AgentState& a = env.agents()[i];
      st.utility.push_back(env.Utility(i));
      st.income_pre.push_back(a.income_pre);
      st.income_post.push_back(a.income_post);
      st.tax.push_back(a.tax_paid);
      st.gathers.push_back(a.gathers);
      st.builds.push_back(a.builds);
      st.trades.push_back(a.trades);
    }
    for (double r : rate_sum[e]) st.mean_rates.push_back(r / P);
    b->stats.push_back(std::move(st));
  }
  return b;
}

dg::Var GtbTrainer::RatesVar(const GtbBatch& b, std::span<const dg::Var> eta) const {
  return dg::Scale(incentive_->Forward(eta, b.period_obs), b.cap);
}

dg::Var GtbTrainer::TaxIncentives(const GtbBatch& b, const dg::Var& rates) const {
  const int n = b.agents, H = b.horizon, P = b.periods, L = b.period_length;
  // Step t has seen the tax of period p once t >= (p + 1) L - 1.
  Matrix seen = Matrix::Zero(H, P), seen_prev = Matrix::Zero(H, P);
  for (int t = 0; t < H; ++t) {
    for (int p = 0; p < P; ++p) {
      if (t >= (p + 1) * L - 1) seen(t, p) = 1.0;
      if (t - 1 >= (p + 1) * L - 1) seen_prev(t, p) = 1.0;
    }
  }
  const dg::Var seen_v = dg::Constant(seen), seen_prev_v = dg::Constant(seen_prev);
  const dg::Var share = dg::Constant(Matrix::Constant(n, n, 1.0 / n));
  std::vector<dg::Var> rows;
  for (int e = 0; e < b.episodes; ++e) {
    const dg::Var r = dg::SliceRows(rates, static_cast<Eigen::Index>(e) * P, P);
    std::vector<dg::Var> taxes;
    for (int i = 0; i < n; ++i) {
      taxes.push_back(dg::SumRows(
          dg::Mul(r, dg::Constant(b.mass[static_cast<size_t>(e) * n + i]))));
    }
    const dg::Var tax = dg::ConcatCols(taxes);               // P x N
    const dg::Var delta = dg::Sub(dg::MatMul(tax, share), tax);
    const dg::Var dz = dg::Sub(delta, dg::StopGradient(delta));  // value 0
    const dg::Var now = dg::Mul(dg::Constant(b.marginal_utility[e]),
                                dg::MatMul(seen_v, dz));
    const dg::Var before = dg::Mul(dg::Constant(b.marginal_utility_prev[e]),
                                   dg::MatMul(seen_prev_v, dz));
    const dg::Var inc = dg::Sub(now, before);  // H x N
    for (int i = 0; i < n; ++i) rows.push_back(dg::SliceCols(inc, i, 1));
  }
  return dg::ConcatRows(rows);
}

agents::AgentTrajectorySlice GtbTrainer::Slice(const GtbBatch& b,
                                               size_t learner) const {
  std::vector<Eigen::Index> rows;
  for (int i : members_[learner]) {
    const std::vector<Eigen::Index> r = b.AgentRows(i);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (members_[learner].size() == static_cast<size_t>(b.agents)) {
    // Shared learner: keep the natural [episode][agent][step] order.
    rows.resize(b.obs.rows());
    std::iota(rows.begin(), rows.end(), 0);
  }
  agents::AgentTrajectorySlice s;
  s.obs = PickRows(b.obs, rows);
  s.next_obs = PickRows(b.next_obs, rows);
  s.env_rewards.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t k = 0; k < rows.size(); ++k) {
    s.actions.push_back(b.actions[rows[k]]);
    s.env_rewards(static_cast<Eigen::Index>(k)) = b.rewards(rows[k]);
    s.dones.push_back(b.agent_dones[rows[k]]);
  }
  s.explore_eps = b.explore_eps;
  return s;
}

void GtbTrainer::Iterate() {
  if (in_phase1()) {
    IterateAgentsOnly(false);
    if (!in_phase1()) {
      nets::Checkpoint ckpt;
      AddAgents(ckpt);
      phase1_ = std::move(ckpt);
    }
    return;
  }
  if (metagrad_) {
    IterateMetaGrad();
  } else if (dual_) {
    IterateDualRl();
  } else {
    IterateAgentsOnly(true);
  }
}

void GtbTrainer::IterateAgentsOnly(bool designer_active) {
  auto b = Rollout(config_.episodes_per_iter, train_rng_, ExploreEps(),
                   designer_active);
  episodes_done_ += b->episodes;
  last_train_welfare_ = b->MeanSwf();
  for (size_t k = 0; k < learners_.size(); ++k) {
    auto up = agents::UpdateLearner({policy_nets_[k].get(), critic_nets_[k].get()},
                                    learners_[k], Slice(*b, k),
                                    config_.agent.hyper, false);
    agents::Commit(learners_[k], up);
  }
}

void GtbTrainer::IterateMetaGrad() {
  if (!metagrad_->started()) metagrad_->Start(*problem_);
  metagrad_->Iterate(*problem_);
}

void GtbTrainer::IterateDualRl() {
  auto b = Rollout(config_.episodes_per_iter, train_rng_, ExploreEps(), true);
  episodes_done_ += b->episodes;
  last_train_welfare_ = b->MeanSwf();
  for (size_t k = 0; k < learners_.size(); ++k) {
    auto up = agents::UpdateLearner({policy_nets_[k].get(), critic_nets_[k].get()},
                                    learners_[k], Slice(*b, k),
                                    config_.agent.hyper, false);
    agents::Commit(learners_[k], up);
  }
  designers::DesignerBatch db;
  db.obs = b->period_obs;
  db.next_obs = b->period_next_obs;
  db.actions = b->decisions;
  db.rewards = b->period_reward * config_.designer.reward_scale;
  db.dones = b->period_dones;
  db.episodes = b->episodes;
  dual_->Learn(db);
}

void GtbTrainer::TrainEpisodes(long episodes) {
  const long target = episodes_done_ + episodes;
  while (episodes_done_ < target) Iterate();
}

MetricsRecord GtbTrainer::Evaluate(int episodes) {
  auto b = Rollout(episodes, eval_rng_, 0.0, !in_phase1());
  const int n = config_.gtb.agents;
  MetricsRecord r;
  r.episode = episodes_done_;
  r.train_welfare = last_train_welfare_;
  r.test_welfare = b->MeanSwf();
  r.psi = 0.0;
  r.swf = r.test_welfare;
  r.agent_returns.assign(n, 0.0);
  for (auto* v : {&r.income_pre, &r.income_post, &r.tax, &r.gathers, &r.builds,
                  &r.trades}) {
    v->assign(n, 0.0);
  }
  r.rates.assign(envs::kGtbBrackets, 0.0);
  const double w = 1.0 / episodes;
  for (const GtbEpisodeStats& st : b->stats) {
    r.prod += w * st.prod;
    r.eq += w * st.eq;
    for (int i = 0; i < n; ++i) {
      r.agent_returns[i] += w * st.utility[i];
      r.income_pre[i] += w * st.income_pre[i];
      r.income_post[i] += w * st.income_post[i];
      r.tax[i] += w * st.tax[i];
      r.gathers[i] += w * st.gathers[i];
      r.builds[i] += w * st.builds[i];
      r.trades[i] += w * st.trades[i];
    }
    for (int k = 0; k < envs::kGtbBrackets; ++k) r.rates[k] += w * st.mean_rates[k];
  }
  return r;
}

nlohmann::json GtbTrainer::Replay(std::uint64_t seed) const {
  Rng rng = MakeRng(seed, 21);
  auto b = Rollout(1, rng, 0.0, !in_phase1());
  const int n = b->agents;
  nlohmann::json steps = nlohmann::json::array();
  for (int t = 0; t < b->horizon; ++t) {
    nlohmann::json s;
    s["t"] = t;
    for (int i = 0; i < n; ++i) {
      const size_t r = static_cast<size_t>(i) * b->horizon + t;
      s["actions"].push_back(b->actions[r]);
      s["rewards"].push_back(b->rewards(static_cast<Eigen::Index>(r)));
    }
    s["designer_reward"] = b->designer_reward(t);
    steps.push_back(std::move(s));
  }
  nlohmann::json rates = nlohmann::json::array();
  for (Eigen::Index p = 0; p < b->rates.rows(); ++p) {
    rates.push_back(std::vector<double>(b->rates.row(p).begin(), b->rates.row(p).end()));
  }
  const GtbEpisodeStats& st = b->stats.front();
  return {{"env", "gtb"},     {"seed", seed},   {"swf", st.swf},
          {"prod", st.prod},  {"eq", st.eq},    {"period_rates", rates},
          {"steps", steps}};
}

void GtbTrainer::AddAgents(nets::Checkpoint& ckpt) const {
  for (size_t k = 0; k < learners_.size(); ++k) {
    const agents::LearnerState& l = learners_[k];
    nets::AddBlock(ckpt, l.policy);
    for (size_t j = 0; j < l.critic.size(); ++j) {
      ckpt[l.policy.prefix + ".critic." + std::to_string(j)] = l.critic[j];
    }
  }
}

void GtbTrainer::RestoreAgents(const nets::Checkpoint& ckpt) {
  for (agents::LearnerState& l : learners_) {
    nets::RestoreBlock(ckpt, l.policy);
    for (size_t j = 0; j < l.critic.size(); ++j) {
      auto it = ckpt.find(l.policy.prefix + ".critic." + std::to_string(j));
      if (it == ckpt.end()) continue;  // policy-only checkpoints are fine
      if (it->second.rows() != l.critic[j].rows() ||
          it->second.cols() != l.critic[j].cols()) {
        throw std::runtime_error("checkpoint critic shape mismatch");
      }
      l.critic[j] = it->second;
      if (j < l.target.size()) l.target[j] = it->second;
    }
  }
}

nets::Checkpoint GtbTrainer::Save() const {
  nets::Checkpoint ckpt;
  AddAgents(ckpt);
  if (metagrad_) nets::AddBlock(ckpt, metagrad_->eta());
  if (dual_) nets::AddBlock(ckpt, dual_->params());
  return ckpt;
}

void GtbTrainer::Load(const nets::Checkpoint& ckpt) {
  RestoreAgents(ckpt);
  if (metagrad_) nets::RestoreBlock(ckpt, metagrad_->mutable_eta());
  if (dual_) nets::RestoreBlock(ckpt, dual_->params());
}

std::unique_ptr<Trainable> MakeGtbTrainer(const RunConfig& config) {
  return std::make_unique<GtbTrainer>(config);
}

}  // namespace mgid::harness
