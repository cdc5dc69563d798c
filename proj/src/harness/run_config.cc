#include "mgid/harness/run_config.h"

#include <fstream>
#include <stdexcept>

namespace mgid::harness {

using nlohmann::json;

namespace {

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json AgentToJson(const AgentConfig& a) {
  const agents::AgentHyper& h = a.hyper;
  return {{"kind", agents::AgentKindName(h.kind)},
          {"lr", h.lr},
          {"critic_lr", h.critic_lr},
          {"gamma", h.gamma},
          {"gae_lambda", h.gae_lambda},
          {"clip_eps", h.clip_eps},
          {"entropy_coef", h.entropy_coef},
          {"target_rate", h.target_rate},
          {"q_temperature", h.q_temperature},
          {"grad_clip", h.grad_clip},
          {"adam", h.adam},
          {"hidden", a.hidden},
          {"critic_hidden", a.critic_hidden},
          {"explore_start", a.explore_start},
          {"explore_end", a.explore_end},
          {"explore_episodes", a.explore_episodes},
          {"shared", a.shared}};
}

AgentConfig AgentFromJson(const json& j) {
  AgentConfig a;
  agents::AgentHyper& h = a.hyper;
  if (j.contains("kind")) h.kind = agents::ParseAgentKind(j.at("kind"));
  Read(j, "lr", h.lr);
  Read(j, "critic_lr", h.critic_lr);
  Read(j, "gamma", h.gamma);
  Read(j, "gae_lambda", h.gae_lambda);
  Read(j, "clip_eps", h.clip_eps);
  Read(j, "entropy_coef", h.entropy_coef);
  Read(j, "target_rate", h.target_rate);
  Read(j, "q_temperature", h.q_temperature);
  Read(j, "grad_clip", h.grad_clip);
  Read(j, "adam", h.adam);
  Read(j, "hidden", a.hidden);
  Read(j, "critic_hidden", a.critic_hidden);
  Read(j, "explore_start", a.explore_start);
  Read(j, "explore_end", a.explore_end);
  Read(j, "explore_episodes", a.explore_episodes);
  Read(j, "shared", a.shared);
  return a;
}

json DesignerToJson(const DesignerConfig& d) {
  return {{"kind", DesignerKindName(d.kind)},
          {"lr", d.lr},
          {"cost_lr", d.cost_lr},
          {"cost_weight", d.cost_weight},
          {"clip_eps", d.clip_eps},
          {"entropy_coef", d.entropy_coef},
          {"hidden", d.hidden},
          {"critic_hidden", d.critic_hidden},
          {"critic_lr", d.critic.lr},
          {"critic_target_rate", d.critic.target_rate},
          {"gamma", d.critic.gamma},
          {"gae_lambda", d.critic.lambda},
          {"incentive_values", d.incentive_values},
          {"action_cap", d.action_cap},
          {"static_rates", d.static_rates},
          {"rate_levels", d.rate_levels},
          {"reward_scale", d.reward_scale}};
}

DesignerConfig DesignerFromJson(const json& j) {
  DesignerConfig d;
  if (j.contains("kind")) d.kind = ParseDesignerKind(j.at("kind"));
  Read(j, "lr", d.lr);
  Read(j, "cost_lr", d.cost_lr);
  Read(j, "cost_weight", d.cost_weight);
  Read(j, "clip_eps", d.clip_eps);
  Read(j, "entropy_coef", d.entropy_coef);
  Read(j, "hidden", d.hidden);
  Read(j, "critic_hidden", d.critic_hidden);
  Read(j, "critic_lr", d.critic.lr);
  Read(j, "critic_target_rate", d.critic.target_rate);
  Read(j, "gamma", d.critic.gamma);
  Read(j, "gae_lambda", d.critic.lambda);
  Read(j, "incentive_values", d.incentive_values);
  Read(j, "action_cap", d.action_cap);
  Read(j, "static_rates", d.static_rates);
  Read(j, "rate_levels", d.rate_levels);
  Read(j, "reward_scale", d.reward_scale);
  return d;
}

}  // namespace

const char* EnvKindName(EnvKind kind) {
  return kind == EnvKind::kEscapeRoom ? "escape_room" : "gtb";
}

EnvKind ParseEnvKind(const std::string& name) {
  if (name == "escape_room" || name == "er") return EnvKind::kEscapeRoom;
  if (name == "gtb") return EnvKind::kGtb;
  throw std::invalid_argument("unknown environment: " + name);
}

const char* DesignerKindName(DesignerKind kind) {
  switch (kind) {
    case DesignerKind::kNone: return "none";
    case DesignerKind::kMetaGrad: return "metagrad";
    case DesignerKind::kDualRlDiscrete: return "dual_rl_discrete";
    case DesignerKind::kDualRlContinuous: return "dual_rl_continuous";
    case DesignerKind::kStatic: return "static";
    case DesignerKind::kFreeMarket: return "free_market";
  }
  return "unknown";
}

DesignerKind ParseDesignerKind(const std::string& name) {
  if (name == "none") return DesignerKind::kNone;
  if (name == "metagrad") return DesignerKind::kMetaGrad;
  if (name == "dual_rl_discrete" || name == "dual_rl") {
    return DesignerKind::kDualRlDiscrete;
  }
  if (name == "dual_rl_continuous") return DesignerKind::kDualRlContinuous;
  if (name == "static" || name == "us_federal") return DesignerKind::kStatic;
  if (name == "free_market") return DesignerKind::kFreeMarket;
  throw std::invalid_argument("unknown designer: " + name);
}

void RunConfig::Validate() const {
  if (episodes < 0) throw std::invalid_argument("episode budget must be >= 0");
  if (episodes_per_iter < 1) {
    throw std::invalid_argument("episodes_per_iter must be >= 1");
  }
  if (eval_every < 1 || eval_episodes < 1) {
    throw std::invalid_argument("eval_every and eval_episodes must be >= 1");
  }
  agent.hyper.Validate();
  if (!(agent.hyper.lr > 0.0)) throw std::invalid_argument("agent lr must be > 0");
  if (agent.hyper.has_critic() && !(agent.hyper.critic_lr > 0.0)) {
    throw std::invalid_argument("agent critic_lr must be > 0");
  }
  if (!(agent.explore_start >= 0.0 && agent.explore_start <= 1.0 &&
        agent.explore_end >= 0.0 && agent.explore_end <= 1.0)) {
    throw std::invalid_argument("exploration bounds must lie in [0, 1]");
  }
  const bool learns = designer.kind == DesignerKind::kMetaGrad ||
                      designer.kind == DesignerKind::kDualRlDiscrete ||
                      designer.kind == DesignerKind::kDualRlContinuous;
  if (learns && !(designer.lr > 0.0 && designer.critic.lr > 0.0)) {
    throw std::invalid_argument("designer learning rates must be > 0");
  }
  if (!(designer.clip_eps > 0.0)) {
    throw std::invalid_argument("designer clip_eps must be > 0");
  }
  if (designer.rate_levels < 2 || !(designer.reward_scale > 0.0)) {
    throw std::invalid_argument("need rate_levels >= 2 and reward_scale > 0");
  }
  if (curriculum.enabled && curriculum.phase1_episodes < 0) {
    throw std::invalid_argument("phase1_episodes must be >= 0");
  }
  if (anneal.enabled && !(anneal.episodes > 0.0)) {
    throw std::invalid_argument("anneal episodes must be > 0");
  }
  if (env == EnvKind::kEscapeRoom) {
    er.Validate();
    // free_market doubles as the zero-incentive designer here.
    if (designer.kind == DesignerKind::kStatic) {
      throw std::invalid_argument("the static schedule needs the gtb environment");
    }
  } else {
    gtb.Validate();
    if (designer.kind == DesignerKind::kDualRlContinuous) {
      throw std::invalid_argument("dual_rl_continuous is an escape_room designer");
    }
  }
}

RunConfig RunConfigFromJson(const json& j) {
  RunConfig c;
  if (j.contains("env")) c.env = ParseEnvKind(j.at("env"));
  if (j.contains("escape_room")) {
    const json& e = j.at("escape_room");
    Read(e, "n", c.er.n);
    Read(e, "m", c.er.m);
    Read(e, "max_steps", c.er.max_steps);
  }
  if (j.contains("gtb")) c.gtb = envs::GtbConfigFromJson(j.at("gtb"));
  if (j.contains("agent")) c.agent = AgentFromJson(j.at("agent"));
  if (j.contains("designer")) c.designer = DesignerFromJson(j.at("designer"));
  Read(j, "episodes", c.episodes);
  Read(j, "episodes_per_iter", c.episodes_per_iter);
  Read(j, "eval_every", c.eval_every);
  Read(j, "eval_episodes", c.eval_episodes);
  Read(j, "seed", c.seed);
  Read(j, "output_dir", c.output_dir);
  if (j.contains("anneal")) {
    Read(j.at("anneal"), "enabled", c.anneal.enabled);
    Read(j.at("anneal"), "episodes", c.anneal.episodes);
  }
  if (j.contains("curriculum")) {
    const json& k = j.at("curriculum");
    Read(k, "enabled", c.curriculum.enabled);
    Read(k, "phase1_episodes", c.curriculum.phase1_episodes);
    Read(k, "phase1_checkpoint", c.curriculum.phase1_checkpoint);
  }
  c.Validate();
  return c;
}

json RunConfigToJson(const RunConfig& c) {
  return {{"env", EnvKindName(c.env)},
          {"escape_room", {{"n", c.er.n}, {"m", c.er.m}, {"max_steps", c.er.max_steps}}},
          {"gtb", envs::GtbConfigToJson(c.gtb)},
          {"agent", AgentToJson(c.agent)},
          {"designer", DesignerToJson(c.designer)},
          {"episodes", c.episodes},
          {"episodes_per_iter", c.episodes_per_iter},
          {"eval_every", c.eval_every},
          {"eval_episodes", c.eval_episodes},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"anneal", {{"enabled", c.anneal.enabled}, {"episodes", c.anneal.episodes}}},
          {"curriculum",
           {{"enabled", c.curriculum.enabled},
            {"phase1_episodes", c.curriculum.phase1_episodes},
            {"phase1_checkpoint", c.curriculum.phase1_checkpoint}}}};
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config: " + path);
  return RunConfigFromJson(json::parse(in));
}

}  // namespace mgid::harness
