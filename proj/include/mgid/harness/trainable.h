#ifndef MGID_HARNESS_TRAINABLE_H_
#define MGID_HARNESS_TRAINABLE_H_

#include <cstdint>

#include <json.hpp>

#include "mgid/harness/metrics.h"
#include "mgid/nets/checkpoint.h"

namespace mgid::harness {

// A co-training run that can be advanced, evaluated and checkpointed.
class Trainable {
 public:
  virtual ~Trainable() = default;
  // Trains whole iterations until at least `episodes` more episodes ran.
  virtual void TrainEpisodes(long episodes) = 0;
  // Frozen-policy evaluation over `episodes` test episodes. Does not touch
  // the training random streams.
  virtual MetricsRecord Evaluate(int episodes) = 0;
  virtual long episodes_done() const = 0;
  virtual nets::Checkpoint Save() const = 0;
  virtual void Load(const nets::Checkpoint& ckpt) = 0;
  virtual int num_agents() const = 0;
  // One frozen-policy test episode from `seed`, step by step.
  virtual nlohmann::json Replay(std::uint64_t seed) const = 0;
};

}  // namespace mgid::harness

#endif  // MGID_HARNESS_TRAINABLE_H_
