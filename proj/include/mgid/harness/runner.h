#ifndef MGID_HARNESS_RUNNER_H_
#define MGID_HARNESS_RUNNER_H_

#include <functional>
#include <memory>
#include <string>

#include "mgid/harness/metrics.h"
#include "mgid/harness/run_config.h"
#include "mgid/harness/trainable.h"

namespace mgid::harness {

// Builds the trainer matching config.env.
std::unique_ptr<Trainable> MakeTrainer(const RunConfig& config);

struct RunOptions {
  // Write metrics.csv, config.json and checkpoints under output_dir.
  bool write_files = true;
  // Called after every evaluation row.
  std::function<void(const MetricsRecord&)> on_eval;
};

struct RunResult {
  Table metrics;
  MetricsRecord final_record;
  std::string csv_path;
};

// Evaluates at episode 0 and after every `eval_every` training episodes
// until the budget is spent. Throws std::runtime_error (after writing
// diagnostics.json) when a metric turns non-finite.
RunResult TrainRun(const RunConfig& config, const RunOptions& options = {});

// Same loop on an existing trainer, e.g. one restored from a checkpoint.
RunResult TrainRun(Trainable& trainer, const RunConfig& config,
                   const RunOptions& options = {});

}  // namespace mgid::harness

#endif  // MGID_HARNESS_RUNNER_H_
