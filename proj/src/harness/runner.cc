#include "mgid/harness/runner.h"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "mgid/diffgraph/graph.h"
#include "mgid/harness/er_trainer.h"
#include "mgid/harness/gtb_trainer.h"

namespace mgid::harness {
namespace {

bool AllFinite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

bool ParamsFinite(const Trainable& trainer) {
  for (const auto& [key, m] : trainer.Save()) {
    if (!m.allFinite()) return false;
  }
  return true;
}

void DumpDiagnostics(const RunConfig& config, const Trainable& trainer,
                     const MetricsRecord& r, const std::string& error) {
  nlohmann::json j;
  j["error"] = error;
  j["episode"] = trainer.episodes_done();
  j["record"] = MetricsValues(config.env, r);
  j["columns"] = MetricsColumns(config.env, trainer.num_agents());
  j["config"] = RunConfigToJson(config);
  j["log_clamps"] = dg::ThreadDiagnostics().log_clamps;
  // Parameters can hold NaN, which JSON cannot; store them as strings.
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [key, m] : trainer.Save()) {
    nlohmann::json vals = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      vals.push_back(FormatNumber(m.data()[k]));
    }
    params[key] = vals;
  }
  j["params"] = params;
  WriteTextFile(config.output_dir + "/diagnostics.json", j.dump(1) + "\n");
}

}  // namespace

std::unique_ptr<Trainable> MakeTrainer(const RunConfig& config) {
  switch (config.env) {
    case EnvKind::kEscapeRoom:
      return std::make_unique<ErTrainer>(config);
    case EnvKind::kGtb:
      return MakeGtbTrainer(config);
  }
  throw std::invalid_argument("unknown environment");
}

RunResult TrainRun(const RunConfig& config, const RunOptions& options) {
  std::unique_ptr<Trainable> trainer = MakeTrainer(config);
  return TrainRun(*trainer, config, options);
}

RunResult TrainRun(Trainable& trainer, const RunConfig& config,
                   const RunOptions& options) {
  config.Validate();
  dg::ResetDiagnostics();
  const std::string dir = config.output_dir;
  RunResult result;
  result.csv_path = dir + "/metrics.csv";
  std::unique_ptr<MetricsWriter> writer;
  if (options.write_files) {
    WriteTextFile(dir + "/config.json", RunConfigToJson(config).dump(2) + "\n");
    writer = std::make_unique<MetricsWriter>(result.csv_path, config.env,
                                             trainer.num_agents());
  }
  result.metrics.columns = MetricsColumns(config.env, trainer.num_agents());

  const long start = trainer.episodes_done();
  const long end = start + config.episodes;
  auto evaluate = [&] {
    MetricsRecord r = trainer.Evaluate(config.eval_episodes);
    const std::vector<double> values = MetricsValues(config.env, r);
    if (!AllFinite(values)) {
      if (options.write_files) DumpDiagnostics(config, trainer, r, "non-finite metric");
      throw std::runtime_error("non-finite metric at episode " +
                               std::to_string(trainer.episodes_done()) +
                               "; run aborted");
    }
    result.metrics.rows.push_back(values);
    if (writer) writer->Append(r);
    if (options.on_eval) options.on_eval(r);
    result.final_record = r;
  };

  evaluate();
  while (trainer.episodes_done() < end) {
    const long next = std::min(end, trainer.episodes_done() + config.eval_every);
    std::string error;
    try {
      trainer.TrainEpisodes(next - trainer.episodes_done());
      if (!ParamsFinite(trainer)) error = "non-finite parameters";
    } catch (const std::exception& e) {
      error = e.what();
    }
    if (!error.empty()) {
      if (options.write_files) {
        DumpDiagnostics(config, trainer, result.final_record, error);
      }
      throw std::runtime_error(error + " at episode " +
                               std::to_string(trainer.episodes_done()) +
                               "; run aborted");
    }
    evaluate();
  }
  if (options.write_files) {
    nets::SaveCheckpoint(dir + "/checkpoint.json", trainer.Save());
  }
  return result;
}

}  // namespace mgid::harness
