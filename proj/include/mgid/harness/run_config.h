#ifndef MGID_HARNESS_RUN_CONFIG_H_
#define MGID_HARNESS_RUN_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgid/agents/learners.h"
#include "mgid/designers/value_function.h"
#include "mgid/envs/escape_room.h"
#include "mgid/envs/gtb.h"

namespace mgid::harness {

enum class EnvKind { kEscapeRoom, kGtb };

enum class DesignerKind {
  kNone,              // no designer at all
  kMetaGrad,
  kDualRlDiscrete,    // ER: composite categorical; GTB: factored rates
  kDualRlContinuous,  // ER only
  kStatic,            // GTB fixed schedule
  kFreeMarket,        // GTB zero-tax schedule
};

const char* EnvKindName(EnvKind kind);
EnvKind ParseEnvKind(const std::string& name);
const char* DesignerKindName(DesignerKind kind);
DesignerKind ParseDesignerKind(const std::string& name);

struct AgentConfig {
  agents::AgentHyper hyper;
  std::vector<int> hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  // Exploration lower bound, linearly decayed over `explore_episodes`.
  double explore_start = 0.0;
  double explore_end = 0.0;
  double explore_episodes = 1.0;
  bool shared = false;  // one parameter set for all agents
};

struct DesignerConfig {
  DesignerKind kind = DesignerKind::kMetaGrad;
  double lr = 1e-3;
  double cost_lr = 1e-4;
  double cost_weight = 1.0;
  double clip_eps = 0.2;
  double entropy_coef = 0.0;
  std::vector<int> hidden{64, 32};
  std::vector<int> critic_hidden{64, 32};
  designers::ValueConfig critic;
  // dual-RL (d) in ER: the incentive set S_r.
  std::vector<double> incentive_values{0.0, 1.1, 2.0};
  long action_cap = 100000;
  // GTB static schedule and factored dual-RL levels.
  std::vector<double> static_rates{0.10, 0.12, 0.22, 0.24, 0.32, 0.35, 0.37};
  int rate_levels = 21;
  // Multiplies R^ID before the designer critic and advantages see it.
  double reward_scale = 1.0;
};

struct AnnealConfig {
  bool enabled = false;
  double episodes = 8000.0;  // E_anneal
};

struct CurriculumConfig {
  bool enabled = false;
  long phase1_episodes = 0;
  // Loads Phase-1 agents from here when set instead of training them.
  std::string phase1_checkpoint;
};

struct RunConfig {
  EnvKind env = EnvKind::kEscapeRoom;
  envs::ErConfig er;
  envs::GtbConfig gtb;
  AgentConfig agent;
  DesignerConfig designer;
  long episodes = 1000;
  int episodes_per_iter = 16;
  long eval_every = 100;
  int eval_episodes = 100;
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  AnnealConfig anneal;
  CurriculumConfig curriculum;

  // Throws std::invalid_argument.
  void Validate() const;
};

RunConfig RunConfigFromJson(const nlohmann::json& j);
nlohmann::json RunConfigToJson(const RunConfig& c);
RunConfig LoadRunConfig(const std::string& path);

}  // namespace mgid::harness

#endif  // MGID_HARNESS_RUN_CONFIG_H_
