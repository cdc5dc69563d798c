#ifndef MGID_NETS_CHECKPOINT_H_
#define MGID_NETS_CHECKPOINT_H_

#include <map>
#include <string>

#include <json.hpp>

#include "mgid/diffgraph/graph.h"
#include "mgid/nets/mlp.h"

namespace mgid::nets {

// Flat key -> 2-D array map. Serialized as a JSON object whose values are
// arrays of rows of decimal numbers.
using Checkpoint = std::map<std::string, dg::Matrix>;

nlohmann::json CheckpointToJson(const Checkpoint& ckpt);
Checkpoint CheckpointFromJson(const nlohmann::json& j);

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::string& path);

void AddBlock(Checkpoint& ckpt, const ParamBlock& block);
// Assigns every parameter of `block` from `ckpt`; throws if one is missing
// or has the wrong shape.
void RestoreBlock(const Checkpoint& ckpt, ParamBlock& block);

}  // namespace mgid::nets

#endif  // MGID_NETS_CHECKPOINT_H_
