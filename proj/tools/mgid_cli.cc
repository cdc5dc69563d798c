// Command-line front end: train, eval, search, plot, replay.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgid/harness/plots.h"
#include "mgid/harness/runner.h"
#include "mgid/harness/search.h"

using nlohmann::json;
namespace h = mgid::harness;

namespace {

// Flags fill a JSON document; a config file, when given, is merged on top.
struct CommonFlags {
  std::string config;
  std::string env;
  std::string designer;
  std::string agent;
  long episodes = -1;
  long seed = -1;
  std::string out;
  int n = -1;
  int m = -1;
  long eval_every = -1;
  int eval_episodes = -1;
  int per_iter = -1;
  double designer_lr = -1;
  double agent_lr = -1;

  void Add(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON run config (overrides flags)");
    app->add_option("--env", env, "escape_room | gtb");
    app->add_option("--designer", designer,
                    "none | metagrad | dual_rl_discrete | dual_rl_continuous | "
                    "static | free_market");
    app->add_option("--agent", agent, "pg | ac | ppo | q_softmax");
    app->add_option("--episodes", episodes, "training episode budget");
    app->add_option("--seed", seed, "random seed");
    app->add_option("-o,--out", out, "output directory");
    app->add_option("--n", n, "Escape Room agents");
    app->add_option("--m", m, "Escape Room lever pullers needed");
    app->add_option("--eval-every", eval_every, "episodes between evaluations");
    app->add_option("--eval-episodes", eval_episodes, "test episodes per evaluation");
    app->add_option("--episodes-per-iter", per_iter, "episodes per update");
    app->add_option("--designer-lr", designer_lr, "designer learning rate");
    app->add_option("--agent-lr", agent_lr, "agent learning rate");
  }

  h::RunConfig Build() const {
    json j = json::object();
    if (!env.empty()) j["env"] = env;
    if (!designer.empty()) j["designer"]["kind"] = designer;
    if (!agent.empty()) j["agent"]["kind"] = agent;
    if (episodes >= 0) j["episodes"] = episodes;
    if (seed >= 0) j["seed"] = seed;
    if (!out.empty()) j["output_dir"] = out;
    if (n > 0) j["escape_room"]["n"] = n;
    if (m > 0) j["escape_room"]["m"] = m;
    if (eval_every > 0) j["eval_every"] = eval_every;
    if (eval_episodes > 0) j["eval_episodes"] = eval_episodes;
    if (per_iter > 0) j["episodes_per_iter"] = per_iter;
    if (designer_lr > 0) j["designer"]["lr"] = designer_lr;
    if (agent_lr > 0) j["agent"]["lr"] = agent_lr;
    if (!config.empty()) j.merge_patch(json::parse(h::ReadTextFile(config)));
    return h::RunConfigFromJson(j);
  }
};

void PrintRecord(const h::MetricsRecord& r) {
  std::printf("episode %ld  train %.3f  test %.3f  psi %.3f\n", r.episode,
              r.train_welfare, r.test_welfare, r.psi);
  std::fflush(stdout);
}

// A trained run: its config.json and checkpoint.json, or explicit paths.
struct RunFiles {
  std::string run_dir;
  std::string config;
  std::string checkpoint;

  void Add(CLI::App* app) {
    app->add_option("-r,--run", run_dir, "run directory written by train");
    app->add_option("-c,--config", config, "run config (default <run>/config.json)");
    app->add_option("--checkpoint", checkpoint,
                    "checkpoint (default <run>/checkpoint.json)");
  }

  std::unique_ptr<h::Trainable> Load(h::RunConfig* cfg) const {
    const std::string c = !config.empty() ? config : run_dir + "/config.json";
    const std::string k = !checkpoint.empty() ? checkpoint : run_dir + "/checkpoint.json";
    if (run_dir.empty() && (config.empty() || checkpoint.empty())) {
      throw std::invalid_argument("give --run or both --config and --checkpoint");
    }
    *cfg = h::LoadRunConfig(c);
    auto trainer = h::MakeTrainer(*cfg);
    trainer->Load(mgid::nets::LoadCheckpoint(k));
    return trainer;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incentive design by meta-gradients"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  bool quiet = false;
  CLI::App* train = app.add_subcommand("train", "co-train designer and agents");
  train_flags.Add(train);
  train->add_flag("-q,--quiet", quiet, "no per-evaluation log lines");

  RunFiles eval_files;
  int eval_episodes = -1;
  std::string eval_out;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_files.Add(eval);
  eval->add_option("--eval-episodes", eval_episodes, "test episodes");
  eval->add_option("-o,--out", eval_out, "write a one-row metrics CSV here");

  CommonFlags search_flags;
  std::string search_spec;
  int workers = -1;
  CLI::App* search = app.add_subcommand("search", "successive-elimination search");
  search_flags.Add(search);
  search->add_option("-s,--space", search_spec, "search spec JSON")->required();
  search->add_option("-w,--workers", workers, "parallel workers");

  std::string plot_csv, plot_dir;
  CLI::App* plot = app.add_subcommand("plot", "SVG figures from a metrics CSV");
  plot->add_option("csv", plot_csv, "metrics.csv")->required();
  plot->add_option("-o,--out", plot_dir, "output directory (default: next to the CSV)");

  RunFiles replay_files;
  long replay_seed = 0;
  std::string replay_out;
  CLI::App* replay = app.add_subcommand("replay", "one test episode, step by step");
  replay_files.Add(replay);
  replay->add_option("--seed", replay_seed, "episode seed");
  replay->add_option("-o,--out", replay_out, "write JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) {
      h::RunConfig cfg = train_flags.Build();
      h::RunOptions opts;
      if (!quiet) opts.on_eval = PrintRecord;
      h::RunResult res = h::TrainRun(cfg, opts);
      std::printf("final test welfare %.4f\nmetrics: %s\n",
                  res.final_record.test_welfare, res.csv_path.c_str());
    } else if (*eval) {
      h::RunConfig cfg;
      auto trainer = eval_files.Load(&cfg);
      const int n = eval_episodes > 0 ? eval_episodes : cfg.eval_episodes;
      const h::MetricsRecord r = trainer->Evaluate(n);
      PrintRecord(r);
      if (cfg.env == h::EnvKind::kGtb) {
        std::printf("swf %.4f  prod %.4f  eq %.4f\n", r.swf, r.prod, r.eq);
      }
      if (!eval_out.empty()) {
        h::MetricsWriter w(eval_out, cfg.env, trainer->num_agents());
        w.Append(r);
      }
    } else if (*search) {
      h::RunConfig base = search_flags.Build();
      h::SearchSpec spec = h::SearchSpecFromJson(json::parse(h::ReadTextFile(search_spec)));
      if (workers > 0) spec.workers = workers;
      const h::SearchResult res = h::SuccessiveEliminationSearch(base, spec);
      std::printf("survivors:");
      for (int c : res.survivor_counts) std::printf(" %d", c);
      std::printf("\nbest candidate %d\nconfig: %s/best_config.json\n",
                  res.best_index, spec.output_dir.c_str());
    } else if (*plot) {
      if (plot_dir.empty()) {
        plot_dir = std::filesystem::path(plot_csv).parent_path().string();
        if (plot_dir.empty()) plot_dir = ".";
      }
      for (const std::string& p : h::EmitPlots(h::ParseCsv(h::ReadTextFile(plot_csv)), plot_dir)) {
        std::printf("%s\n", p.c_str());
      }
    } else if (*replay) {
      h::RunConfig cfg;
      auto trainer = replay_files.Load(&cfg);
      const std::string text =
          trainer->Replay(static_cast<std::uint64_t>(replay_seed)).dump(1) + "\n";
      if (replay_out.empty()) {
        std::fputs(text.c_str(), stdout);
      } else {
        h::WriteTextFile(replay_out, text);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
